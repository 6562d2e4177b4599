"""Prompt text: role prompts, graph verbalization, metric definitions, methods.

Templates live in ``templates/<version>/`` as plain text with ``{placeholders}``.
Every function here is a pure function of its arguments.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import EmptyExemplarPool, MalformedRecord
from .graph import Graph, MetricKind, build_graph

TEMPLATE_VERSION = "v1"


class Method(str, enum.Enum):
    ZERO_SHOT = "ZeroShot"
    FEW_SHOT = "FewShot"
    ZERO_COT = "ZeroCoT"

    @classmethod
    def parse(cls, name: str) -> "Method":
        aliases = {"zero-shot": cls.ZERO_SHOT, "few-shot": cls.FEW_SHOT, "0-cot": cls.ZERO_COT}
        key = name.strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        return cls(key)

    @property
    def cli_name(self) -> str:
        return {"ZeroShot": "zero-shot", "FewShot": "few-shot", "ZeroCoT": "0-cot"}[self.value]


@lru_cache(maxsize=None)
def template(name: str, version: str = TEMPLATE_VERSION) -> str:
    path = resources.files("csagent").joinpath("templates", version, name)
    return path.read_text(encoding="utf-8").rstrip("\n")


def render(name: str, **values) -> str:
    return template(name).format(**values)


COT_CUE = template("cot_cue.txt")
ANSWER_CONTRACT = template("answer_contract.txt")


@dataclass(frozen=True)
class Exemplar:
    id: str
    metric: MetricKind
    k: int
    query: int
    graph: Graph
    worked_answer: str


@dataclass(frozen=True)
class PromptBundle:
    system_role: str
    user_prompt: str
    method: Method
    exemplar_id: str | None = None


def verbalize_graph(g: Graph, q: int) -> str:
    """Three lines: query node, node range, JSON-style adjacency map."""
    g.check_vertex(q)
    adjacency = json.dumps({str(v): list(nbrs) for v, nbrs in enumerate(g.adj)})
    return (
        f"Query node: {q}\n"
        f"Nodes are numbered from 0 to {g.n - 1}.\n"
        f"Adjacent list: {adjacency}"
    )


def parse_verbalization(text: str) -> tuple[Graph, int]:
    """Inverse of :func:`verbalize_graph`."""
    lines = text.strip().splitlines()
    if len(lines) != 3 or not lines[0].startswith("Query node: "):
        raise MalformedRecord("not a graph verbalization")
    q = int(lines[0].removeprefix("Query node: "))
    prefix = "Adjacent list: "
    if not lines[2].startswith(prefix):
        raise MalformedRecord("missing adjacency line")
    mapping = json.loads(lines[2][len(prefix):])
    n = len(mapping)
    edges = [(int(u), v) for u, nbrs in mapping.items() for v in nbrs]
    return build_graph(n, edges), q


def _plural(count: int, word: str) -> str:
    return word if count == 1 else word + "s"


def metric_definition(kind, k: int) -> str:
    kind = MetricKind(kind)
    if kind is MetricKind.CORE:
        return render("definition_core.txt", k=k)
    if kind is MetricKind.TRUSS:
        return render("definition_truss.txt", k=k, k_minus_2=k - 2,
                      triangle_word=_plural(k - 2, "triangle"))
    if kind is MetricKind.CLIQUE:
        return render("definition_clique.txt", k=k)
    return render("definition_ecc.txt", k=k, k_minus_1=k - 1,
                  edge_word=_plural(k - 1, "edge"))


def task_instruction(q: int) -> str:
    return render("task_instruction.txt", query=q)


@lru_cache(maxsize=1)
def default_exemplars() -> tuple[Exemplar, ...]:
    raw = json.loads(template("exemplars.json"))
    return tuple(
        Exemplar(
            id=e["id"],
            metric=MetricKind(e["metric"]),
            k=e["k"],
            query=e["query"],
            graph=build_graph(e["n"], e["edges"]),
            worked_answer=e["worked_answer"],
        )
        for e in raw
    )


def _pick(pool, kind: MetricKind, rng) -> Exemplar:
    same = [e for e in pool if e.metric is kind]
    candidates = same or list(pool)
    return candidates[int(rng.integers(len(candidates)))]


def build_prompt(inst, method, exemplars=None, rng=None) -> PromptBundle:
    """Assemble the baseline prompt for one instance.

    ``rng`` (a numpy Generator or an int seed) only matters for few-shot,
    where it picks one exemplar, preferring ones with the instance's metric.
    By default it is seeded from the instance seed.
    """
    method = Method.parse(method) if isinstance(method, str) else Method(method)
    definition = metric_definition(inst.metric, inst.k)
    parts = [definition]
    exemplar_id = None
    if method is Method.FEW_SHOT:
        pool = default_exemplars() if exemplars is None else tuple(exemplars)
        if not pool:
            raise EmptyExemplarPool("few-shot prompting needs at least one exemplar")
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(inst.seed if rng is None else rng)
        ex = _pick(pool, inst.metric, rng)
        exemplar_id = ex.id
        parts.append(
            render(
                "fewshot_block.txt",
                exemplar_graph=metric_definition(ex.metric, ex.k) + "\n" + verbalize_graph(ex.graph, ex.query),
                exemplar_task=task_instruction(ex.query),
                exemplar_answer=ex.worked_answer,
            )
        )
    parts.append(verbalize_graph(inst.graph, inst.query))
    parts.append(task_instruction(inst.query))
    if method is Method.ZERO_COT:
        parts.append(COT_CUE)
    parts.append(ANSWER_CONTRACT)
    return PromptBundle(
        system_role=template("analyst_role.txt"),
        user_prompt="\n".join(parts),
        method=method,
        exemplar_id=exemplar_id,
    )
