"""Simple undirected graphs, task instances and the dataset line format.

Vertices are dense integers ``0..n-1``. A ``Graph`` is immutable once built,
so it can be shared freely between benchmark workers.
"""
from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import EndpointOutOfRange, MalformedRecord, SelfLoop, VertexNotInGraph

VertexSet = frozenset  # frozenset[int]; sorted on the way out


class MetricKind(str, enum.Enum):
    CORE = "Core"
    TRUSS = "Truss"
    CLIQUE = "Clique"
    ECC = "ECC"


class DatasetKind(str, enum.Enum):
    PSG = "PSG"
    LFR = "LFR"


class Difficulty(str, enum.Enum):
    EASY = "Easy"
    MEDIUM = "Medium"
    HARD = "Hard"


# |V| range per tier, inclusive.
TIER_RANGES: dict[DatasetKind, dict[Difficulty, tuple[int, int]]] = {
    DatasetKind.PSG: {
        Difficulty.EASY: (5, 10),
        Difficulty.MEDIUM: (11, 25),
        Difficulty.HARD: (26, 35),
    },
    DatasetKind.LFR: {
        Difficulty.EASY: (10, 20),
        Difficulty.MEDIUM: (21, 30),
        Difficulty.HARD: (31, 40),
    },
}


def min_k(kind: MetricKind) -> int:
    return 3 if kind is MetricKind.TRUSS else 2


@dataclass(frozen=True, eq=True)
class Graph:
    n: int
    adj: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.adj) != self.n:
            raise ValueError("adjacency length does not match n")

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges})"

    def __contains__(self, v) -> bool:
        return isinstance(v, (int, np.integer)) and 0 <= v < self.n

    def check_vertex(self, v: int) -> None:
        if v not in self:
            raise VertexNotInGraph(f"vertex {v!r} not in graph with n={self.n}")

    def neighbors(self, v: int) -> tuple[int, ...]:
        self.check_vertex(v)
        return self.adj[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    @cached_property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        """Each undirected edge once, as ``(u, v)`` with ``u < v``."""
        for u, nbrs in enumerate(self.adj):
            for v in nbrs:
                if u < v:
                    yield (u, v)

    @cached_property
    def _adj_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(a) for a in self.adj)

    def has_edge(self, u: int, v: int) -> bool:
        return 0 <= u < self.n and v in self._adj_sets[u]

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` as int32 arrays; neighbor runs are sorted."""
        indptr = np.zeros(self.n + 1, dtype=np.int32)
        indptr[1:] = np.cumsum([len(a) for a in self.adj], dtype=np.int64)
        indices = np.fromiter(
            (v for a in self.adj for v in a), dtype=np.int32, count=int(indptr[-1])
        )
        return indptr, indices


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Build a simple undirected graph; repeated pairs collapse to one edge."""
    if n < 0:
        raise ValueError("n must be non-negative")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise EndpointOutOfRange(f"edge ({u}, {v}) outside [0, {n})")
        if u == v:
            raise SelfLoop(f"self-loop at vertex {u}")
        nbrs[u].add(int(v))
        nbrs[v].add(int(u))
    return Graph(n, tuple(tuple(sorted(s)) for s in nbrs))


def induced_subgraph(g: Graph, s: Iterable[int]) -> tuple[Graph, tuple[int, ...]]:
    """Subgraph induced by ``s``, relabelled to ``0..|s|-1`` in ascending order.

    Returns the subgraph and the remap table: ``remap[new_id] == old_id``.
    """
    members = sorted(set(s))
    for v in members:
        g.check_vertex(v)
    index = {v: i for i, v in enumerate(members)}
    adj = tuple(
        tuple(index[w] for w in g.adj[v] if w in index) for v in members
    )
    return Graph(len(members), adj), tuple(members)


def connected_component(g: Graph, v: int) -> frozenset:
    g.check_vertex(v)
    seen = {v}
    todo = deque([v])
    while todo:
        u = todo.popleft()
        for w in g.adj[u]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return frozenset(seen)


def is_connected_set(g: Graph, s: Iterable[int]) -> bool:
    """True when ``s`` is nonempty and induces a connected subgraph of ``g``."""
    s = set(s)
    if not s:
        return False
    start = next(iter(s))
    seen = {start}
    todo = [start]
    while todo:
        u = todo.pop()
        for w in g.adj[u]:
            if w in s and w not in seen:
                seen.add(w)
                todo.append(w)
    return len(seen) == len(s)


@dataclass(frozen=True)
class TaskInstance:
    graph: Graph
    metric: MetricKind
    k: int
    query: int
    ground_truth: frozenset
    difficulty: Difficulty
    dataset: DatasetKind
    instance_id: str
    seed: int

    def __post_init__(self):
        problem = instance_problem(self)
        if problem:
            raise MalformedRecord(f"{self.instance_id}: {problem}")


def instance_problem(inst: TaskInstance) -> str | None:
    """Describe the first violated instance invariant, or return None."""
    g = inst.graph
    if not isinstance(inst.metric, MetricKind):
        return f"unknown metric {inst.metric!r}"
    if inst.k < min_k(inst.metric):
        return f"k={inst.k} below minimum for {inst.metric.value}"
    if inst.query not in g:
        return f"query {inst.query} outside [0, {g.n})"
    if any(v not in g for v in inst.ground_truth):
        return "ground truth vertex out of range"
    if inst.ground_truth:
        if inst.query not in inst.ground_truth:
            return "query not in ground truth"
        if not is_connected_set(g, inst.ground_truth):
            return "ground truth is not connected"
    lo, hi = TIER_RANGES[inst.dataset][inst.difficulty]
    if not lo <= g.n <= hi:
        return (
            f"n={g.n} outside {inst.dataset.value} {inst.difficulty.value} "
            f"range {lo}-{hi}"
        )
    if not 0 <= inst.seed < 2**64:
        return "seed is not an unsigned 64-bit integer"
    return None


RECORD_KEYS = (
    "instance_id",
    "dataset",
    "difficulty",
    "metric",
    "k",
    "query",
    "n",
    "adjacency",
    "ground_truth",
    "seed",
)


def instance_to_dict(inst: TaskInstance) -> dict:
    return {
        "instance_id": inst.instance_id,
        "dataset": inst.dataset.value,
        "difficulty": inst.difficulty.value,
        "metric": inst.metric.value,
        "k": inst.k,
        "query": inst.query,
        "n": inst.graph.n,
        "adjacency": {str(v): list(a) for v, a in enumerate(inst.graph.adj)},
        "ground_truth": sorted(inst.ground_truth),
        "seed": inst.seed,
    }


def write_instance(inst: TaskInstance) -> str:
    """One canonical dataset line (no trailing newline)."""
    return json.dumps(instance_to_dict(inst))


def _int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedRecord(f"field {name!r} must be an integer, got {value!r}")
    return value


def instance_from_dict(obj: Mapping) -> TaskInstance:
    missing = [k for k in RECORD_KEYS if k not in obj]
    if missing:
        raise MalformedRecord(f"missing field(s): {', '.join(missing)}")
    try:
        dataset = DatasetKind(obj["dataset"])
        difficulty = Difficulty(obj["difficulty"])
        metric = MetricKind(obj["metric"])
    except ValueError as exc:
        raise MalformedRecord(str(exc)) from None
    n = _int(obj["n"], "n")
    adjacency = obj["adjacency"]
    if not isinstance(adjacency, Mapping) or set(adjacency) != {str(v) for v in range(n)}:
        raise MalformedRecord("adjacency keys must be exactly 0..n-1")
    edges = []
    try:
        for key, nbrs in adjacency.items():
            u = int(key)
            edges.extend((u, _int(v, "adjacency")) for v in nbrs)
        g = build_graph(n, edges)
    except (ValueError, TypeError) as exc:
        raise MalformedRecord(f"bad adjacency: {exc}") from None
    for v in range(n):
        if list(adjacency[str(v)]) != list(g.adj[v]):
            raise MalformedRecord(f"adjacency of {v} is not sorted, unique and symmetric")
    truth = [_int(v, "ground_truth") for v in obj["ground_truth"]]
    if len(set(truth)) != len(truth):
        raise MalformedRecord("duplicate ground truth vertex")
    instance_id = obj["instance_id"]
    if not isinstance(instance_id, str):
        raise MalformedRecord("instance_id must be a string")
    return TaskInstance(
        graph=g,
        metric=metric,
        k=_int(obj["k"], "k"),
        query=_int(obj["query"], "query"),
        ground_truth=frozenset(truth),
        difficulty=difficulty,
        dataset=dataset,
        instance_id=instance_id,
        seed=_int(obj["seed"], "seed"),
    )


def read_instance(record: str) -> TaskInstance:
    try:
        obj = json.loads(record)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"not a JSON object: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not a JSON object")
    return instance_from_dict(obj)


def read_dataset(path) -> list[TaskInstance]:
    with open(path, encoding="utf-8") as fh:
        return [read_instance(line) for line in fh if line.strip()]


def write_dataset(path, instances: Iterable[TaskInstance]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(write_instance(inst) + "\n")
