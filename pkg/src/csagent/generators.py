"""Synthetic benchmark graphs with planted communities, and dataset assembly.

Two generators are provided:

* PSG: a random subset of vertices is wired with probability ``p_dense``,
  every other pair with ``p_sparse``.
* LFR: power-law degrees and community sizes with a mixing fraction ``mu``,
  realised by stub matching plus rewiring and a reject-and-retry loop.

Every random choice flows from a seed, so a dataset is a pure function of
its spec.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .errors import InfeasibleParams, InvalidParams, NoViableInstance, RetriesExhausted
from .graph import (
    TIER_RANGES,
    DatasetKind,
    Difficulty,
    Graph,
    MetricKind,
    TaskInstance,
    build_graph,
    connected_component,
    is_connected_set,
    min_k,
    write_instance,
)
from .oracles import Metric, community

MAX_LFR_ATTEMPTS = 50
MAX_INSTANCE_ATTEMPTS = 200


@dataclass(frozen=True)
class PsgParams:
    n: int
    dense_size: int
    p_dense: float = 0.8
    p_sparse: float = 0.2
    seed: int = 0

    def validate(self):
        if self.n < 2:
            raise InvalidParams("PSG needs n >= 2")
        if not 2 <= self.dense_size <= self.n:
            raise InvalidParams(f"dense_size must lie in [2, n], got {self.dense_size}")
        if not 0.0 <= self.p_sparse <= self.p_dense <= 1.0:
            raise InvalidParams("need 0 <= p_sparse <= p_dense <= 1")


@dataclass(frozen=True)
class LfrParams:
    n: int
    tau1: float = 1.8
    tau2: float = 1.2
    mu: float = 0.1
    avg_degree: float = 6.0
    min_community: int = 5
    max_community: int | None = None
    max_degree: int | None = None
    seed: int = 0

    @property
    def community_bounds(self) -> tuple[int, int]:
        hi = self.max_community if self.max_community is not None else max(self.min_community, self.n // 2)
        return self.min_community, min(hi, self.n)

    @property
    def degree_cap(self) -> int:
        cap = self.max_degree if self.max_degree is not None else max(2, int(2.5 * self.avg_degree))
        return min(cap, self.n - 1)

    def validate(self):
        if self.tau1 <= 1 or self.tau2 <= 1:
            raise InvalidParams("power-law exponents must exceed 1")
        if not 0.0 <= self.mu <= 1.0:
            raise InvalidParams("mu must lie in [0, 1]")
        lo, hi = self.community_bounds
        if lo < 2 or lo > hi or lo > self.n:
            raise InfeasibleParams(f"community size bounds [{lo}, {hi}] infeasible for n={self.n}")
        if not 1 <= self.avg_degree <= self.degree_cap:
            raise InfeasibleParams(
                f"avg_degree={self.avg_degree} not within [1, {self.degree_cap}]"
            )


# -- PSG ---------------------------------------------------------------------


def generate_psg(p: PsgParams) -> tuple[Graph, frozenset]:
    p.validate()
    rng = np.random.default_rng(p.seed)
    dense = np.zeros(p.n, dtype=bool)
    dense[rng.choice(p.n, size=p.dense_size, replace=False)] = True
    iu, iv = np.triu_indices(p.n, k=1)
    prob = np.where(dense[iu] & dense[iv], p.p_dense, p.p_sparse)
    keep = rng.random(iu.shape[0]) < prob
    g = build_graph(p.n, zip(iu[keep].tolist(), iv[keep].tolist()))
    return g, frozenset(np.flatnonzero(dense).tolist())


# -- LFR ---------------------------------------------------------------------


def _powerlaw_mean(xmin: float, xmax: float, tau: float) -> float:
    a, b = 1.0 - tau, 2.0 - tau
    if abs(b) < 1e-12:
        return (math.log(xmax) - math.log(xmin)) * (1 - tau) / (xmax**a - xmin**a)
    return (a / b) * (xmax**b - xmin**b) / (xmax**a - xmin**a)


def _powerlaw_sample(rng, xmin: float, xmax: float, tau: float, size):
    a = 1.0 - tau
    u = rng.random(size)
    return (xmin**a + u * (xmax**a - xmin**a)) ** (1.0 / a)


def _degree_sequence(rng, p: LfrParams) -> np.ndarray:
    xmax = float(p.degree_cap)
    lo, hi = 1.0, float(p.avg_degree)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _powerlaw_mean(mid, xmax, p.tau1) < p.avg_degree:
            lo = mid
        else:
            hi = mid
    xmin = 0.5 * (lo + hi)
    deg = np.rint(_powerlaw_sample(rng, xmin, xmax, p.tau1, p.n)).astype(int)
    return np.clip(deg, 1, p.degree_cap)


def _community_sizes(rng, p: LfrParams) -> list[int]:
    lo, hi = p.community_bounds
    for _ in range(1000):
        sizes: list[int] = []
        while sum(sizes) < p.n:
            s = int(np.rint(_powerlaw_sample(rng, lo, hi + 0.5, p.tau2, 1)[0]))
            s = min(max(s, lo), hi)
            rest = p.n - sum(sizes)
            if s > rest:
                s = rest
            sizes.append(s)
        if sizes[-1] < lo:
            # fold the remainder into communities that still have room
            extra = sizes.pop()
            for i in sorted(range(len(sizes)), key=lambda i: sizes[i]):
                take = min(extra, hi - sizes[i])
                sizes[i] += take
                extra -= take
            if extra:
                continue
        return sizes
    raise InfeasibleParams("could not split n into community sizes within bounds")


def _assign(rng, sizes: list[int], k_in: np.ndarray) -> np.ndarray:
    n = len(k_in)
    membership = np.full(n, -1, dtype=int)
    free = list(sizes)
    for v in sorted(range(n), key=lambda v: (-k_in[v], v)):
        fits = [c for c in range(len(sizes)) if free[c] > 0 and sizes[c] - 1 >= k_in[v]]
        if not fits:
            fits = [c for c in range(len(sizes)) if free[c] > 0]
        c = fits[rng.integers(len(fits))]
        membership[v] = c
        free[c] -= 1
    return membership


def _match(rng, stubs: list[int], edges: set, ok) -> int:
    """Pair stubs at random, then rewire rejected pairs; returns stubs left unpaired."""
    stubs = list(stubs)
    rng.shuffle(stubs)
    bad: list[tuple[int, int]] = []
    mine: list[tuple[int, int]] = []
    for i in range(0, len(stubs) - 1, 2):
        a, b = stubs[i], stubs[i + 1]
        e = (min(a, b), max(a, b))
        if a != b and ok(a, b) and e not in edges:
            edges.add(e)
            mine.append(e)
        else:
            bad.append((a, b))
    left = len(stubs) % 2
    for _ in range(3):
        retry = []
        for a, b in bad:
            placed = False
            for _ in range(20):
                if not mine:
                    break
                c, d = mine[rng.integers(len(mine))]
                if rng.random() < 0.5:
                    c, d = d, c
                e1, e2 = (min(a, c), max(a, c)), (min(b, d), max(b, d))
                if (
                    len({a, b, c, d}) == 4
                    and ok(a, c)
                    and ok(b, d)
                    and e1 not in edges
                    and e2 not in edges
                    and e1 != e2
                ):
                    old = (min(c, d), max(c, d))
                    edges.discard(old)
                    mine.remove(old)
                    edges.update((e1, e2))
                    mine.extend((e1, e2))
                    placed = True
                    break
            if not placed:
                retry.append((a, b))
        bad = retry
        if not bad:
            break
    return left + 2 * len(bad)


def _lfr_attempt(rng, p: LfrParams):
    deg = _degree_sequence(rng, p)
    sizes = _community_sizes(rng, p)
    scaled = p.mu * deg
    k_ext = np.floor(scaled).astype(int) + (rng.random(p.n) < scaled - np.floor(scaled))
    k_in = deg - k_ext
    membership = _assign(rng, sizes, k_in)
    for v in range(p.n):
        room = sizes[membership[v]] - 1
        if k_in[v] > room:
            k_in[v] = room
    edges: set[tuple[int, int]] = set()
    for c in range(len(sizes)):
        members = np.flatnonzero(membership == c)
        stubs = [int(v) for v in members for _ in range(k_in[v])]
        _match(rng, stubs, edges, lambda a, b: True)
    if p.mu > 0 and len(sizes) > 1:
        stubs = [v for v in range(p.n) for _ in range(k_ext[v])]
        _match(rng, stubs, edges, lambda a, b: membership[a] != membership[b])
    g = build_graph(p.n, edges)
    partition = [frozenset(np.flatnonzero(membership == c).tolist()) for c in range(len(sizes))]
    return g, partition, membership


def mixing(g: Graph, membership: Sequence[int]) -> float:
    """Mean over non-isolated vertices of the fraction of edges leaving the community."""
    fractions = [
        sum(membership[w] != membership[v] for w in g.adj[v]) / len(g.adj[v])
        for v in range(g.n)
        if g.adj[v]
    ]
    return float(np.mean(fractions)) if fractions else 0.0


def generate_lfr(p: LfrParams) -> tuple[Graph, list[frozenset]]:
    """LFR-style graph plus its planted partition.

    Attempts are rejected when the realised mean mixing strays more than 0.05
    from ``mu`` or the graph is disconnected. With ``mu == 0`` communities
    cannot touch, so each community must be connected instead.
    """
    p.validate()
    root = np.random.SeedSequence(p.seed)
    for child in root.spawn(MAX_LFR_ATTEMPTS):
        rng = np.random.default_rng(child)
        g, partition, membership = _lfr_attempt(rng, p)
        if abs(mixing(g, membership) - p.mu) > 0.05:
            continue
        if p.mu == 0:
            if not all(is_connected_set(g, block) for block in partition):
                continue
        elif len(connected_component(g, 0)) != g.n:
            continue
        return g, partition
    raise RetriesExhausted(f"no acceptable LFR graph in {MAX_LFR_ATTEMPTS} attempts (seed={p.seed})")


# -- instances ---------------------------------------------------------------


def choose_k(g: Graph, q: int, kind: MetricKind) -> tuple[int, frozenset]:
    """Largest informative ``k`` for ``q``, with its community.

    Informative: nonempty, at least 3 vertices and not the whole graph. If no
    ``k`` is informative, fall back to the largest ``k`` with a nonempty
    community.
    """
    kind = MetricKind(kind)
    top = len(g.adj[q]) + 1
    fallback = None
    for k in range(top, min_k(kind) - 1, -1):
        truth = community(g, q, Metric(kind, k))
        if not truth:
            continue
        if len(truth) >= 3 and len(truth) != g.n:
            return k, truth
        if fallback is None:
            fallback = (k, truth)
    if fallback is None:
        raise NoViableInstance(f"no nonempty {kind.value} community around vertex {q}")
    return fallback


def build_instance(
    g: Graph,
    planted,
    metric_kind,
    rng: np.random.Generator,
    *,
    dataset=DatasetKind.PSG,
    difficulty=Difficulty.EASY,
    instance_id: str = "instance",
    seed: int = 0,
) -> TaskInstance:
    """Pick ``q`` inside the planted structure, then ``k`` and the ground truth.

    ``planted`` is one vertex set (PSG) or a partition (LFR); for a partition
    ``q`` is uniform over all vertices it covers.
    """
    if isinstance(planted, (set, frozenset)):
        pool = sorted(planted)
    else:
        pool = sorted(v for block in planted for v in block)
    if not pool:
        raise NoViableInstance("empty planted structure")
    q = int(pool[rng.integers(len(pool))])
    k, truth = choose_k(g, q, metric_kind)
    return TaskInstance(
        graph=g,
        metric=MetricKind(metric_kind),
        k=k,
        query=q,
        ground_truth=truth,
        difficulty=Difficulty(difficulty),
        dataset=DatasetKind(dataset),
        instance_id=instance_id,
        seed=seed,
    )


# -- datasets ----------------------------------------------------------------

PSG_DENSE_FRACTION = {Difficulty.EASY: 0.75, Difficulty.MEDIUM: 0.5, Difficulty.HARD: 0.35}

LFR_TIER_DEFAULTS = {
    Difficulty.EASY: dict(avg_degree=3.5, min_community=5, max_community=10),
    Difficulty.MEDIUM: dict(avg_degree=6.5, min_community=7, max_community=15),
    Difficulty.HARD: dict(avg_degree=7.5, min_community=9, max_community=20),
}


@dataclass
class DatasetSpec:
    dataset: DatasetKind
    counts: dict  # Difficulty -> instances per metric
    metrics: list = field(default_factory=lambda: list(MetricKind))
    n_ranges: dict | None = None
    base_seed: int = 0
    dense_fraction: dict = field(default_factory=lambda: dict(PSG_DENSE_FRACTION))
    p_dense: float = 0.8
    p_sparse: float = 0.2
    lfr: dict = field(default_factory=lambda: {t: dict(v) for t, v in LFR_TIER_DEFAULTS.items()})
    parallelism: int = 1

    def __post_init__(self):
        self.dataset = DatasetKind(self.dataset)
        self.counts = {Difficulty(t): int(c) for t, c in self.counts.items()}
        self.metrics = [MetricKind(m) for m in self.metrics]
        ranges = dict(TIER_RANGES[self.dataset])
        for t, r in (self.n_ranges or {}).items():
            ranges[Difficulty(t)] = tuple(r)
        self.n_ranges = ranges
        self.dense_fraction = {Difficulty(t): float(f) for t, f in self.dense_fraction.items()}
        self.lfr = {Difficulty(t): dict(v) for t, v in self.lfr.items()}
        for t, c in self.counts.items():
            if c < 0:
                raise InvalidParams(f"negative count for tier {t.value}")
            lo, hi = self.n_ranges[t]
            tlo, thi = TIER_RANGES[self.dataset][t]
            if not tlo <= lo <= hi <= thi:
                raise InvalidParams(f"n range {lo}-{hi} leaves tier {t.value} ({tlo}-{thi})")

    @classmethod
    def from_dict(cls, obj: dict) -> "DatasetSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise InvalidParams(f"unknown dataset spec field(s): {sorted(unknown)}")
        return cls(**obj)


def _instance_seed(base_seed: int, key: tuple[int, ...]) -> int:
    ss = np.random.SeedSequence(base_seed, spawn_key=key)
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


def _make_one(spec: DatasetSpec, tier: Difficulty, metric: MetricKind, index: int):
    """Returns ``(instance, discarded_graphs)``."""
    key = (
        list(DatasetKind).index(spec.dataset),
        list(Difficulty).index(tier),
        list(MetricKind).index(metric),
        index,
    )
    seed = _instance_seed(spec.base_seed, key)
    rng = np.random.default_rng(seed)
    lo, hi = spec.n_ranges[tier]
    instance_id = f"{spec.dataset.value}-{tier.value}-{metric.value}-{index:05d}"
    discarded = 0
    for _ in range(MAX_INSTANCE_ATTEMPTS):
        n = int(rng.integers(lo, hi + 1))
        sub_seed = int(rng.integers(2**63))
        if spec.dataset is DatasetKind.PSG:
            dense = max(2, math.ceil(spec.dense_fraction[tier] * n))
            g, planted = generate_psg(PsgParams(n, dense, spec.p_dense, spec.p_sparse, sub_seed))
        else:
            try:
                g, planted = generate_lfr(LfrParams(n, seed=sub_seed, **spec.lfr[tier]))
            except RetriesExhausted:
                discarded += 1
                continue
        try:
            inst = build_instance(
                g, planted, metric, rng,
                dataset=spec.dataset, difficulty=tier, instance_id=instance_id, seed=seed,
            )
        except NoViableInstance:
            discarded += 1
            continue
        if spec.dataset is DatasetKind.PSG and not planted <= connected_component(g, inst.query):
            discarded += 1
            continue
        return inst, discarded
    raise NoViableInstance(f"{instance_id}: no viable graph in {MAX_INSTANCE_ATTEMPTS} attempts")


def _make_star(args):
    return _make_one(*args)


def iter_jobs(spec: DatasetSpec):
    for tier in Difficulty:
        for metric in spec.metrics:
            for index in range(spec.counts.get(tier, 0)):
                yield (spec, tier, metric, index)


def build_dataset(spec: DatasetSpec) -> tuple[list[TaskInstance], dict]:
    jobs = list(iter_jobs(spec))
    if spec.parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(spec.parallelism) as pool:
            results = list(pool.map(_make_star, jobs, chunksize=8))
    else:
        results = [_make_one(*job) for job in jobs]
    instances = [inst for inst, _ in results]
    discards: dict[tuple, int] = {}
    for (_, tier, metric, _), (_, d) in zip(jobs, results):
        discards[(tier, metric)] = discards.get((tier, metric), 0) + d
    return instances, build_manifest(spec, instances, discards)


def _row(dataset, tier, metric, group, discarded):
    return {
        "dataset": dataset,
        "difficulty": tier,
        "metric": metric,
        "count": len(group),
        "mean_n": round(float(np.mean([i.graph.n for i in group])), 4) if group else None,
        "mean_edges": round(float(np.mean([i.graph.num_edges for i in group])), 4) if group else None,
        "mean_truth_size": round(float(np.mean([len(i.ground_truth) for i in group])), 4) if group else None,
        "discarded": discarded,
    }


def build_manifest(spec: DatasetSpec, instances: list[TaskInstance], discards=None) -> dict:
    """Per-(tier, metric) statistics plus pooled per-tier rows (``metric == "All"``)."""
    discards = discards or {}
    rows = []
    for tier in Difficulty:
        if tier not in spec.counts:
            continue
        tier_group = [i for i in instances if i.difficulty is tier]
        for metric in spec.metrics:
            group = [i for i in tier_group if i.metric is metric]
            rows.append(_row(spec.dataset.value, tier.value, metric.value, group,
                             discards.get((tier, metric), 0)))
        rows.append(_row(spec.dataset.value, tier.value, "All", tier_group,
                         sum(v for (t, _), v in discards.items() if t is tier)))
    return {
        "dataset": spec.dataset.value,
        "base_seed": spec.base_seed,
        "total": len(instances),
        "rows": rows,
    }


def generate_dataset(spec: DatasetSpec, out_path, manifest_path=None) -> dict:
    """Write the dataset lines and a manifest; returns the manifest."""
    instances, manifest = build_dataset(spec)
    with open(out_path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(write_instance(inst) + "\n")
    if manifest_path is not None:
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    return manifest


def spec_to_dict(spec: DatasetSpec) -> dict:
    out = asdict(spec)
    out["dataset"] = spec.dataset.value
    out["counts"] = {t.value: c for t, c in spec.counts.items()}
    out["metrics"] = [m.value for m in spec.metrics]
    out["n_ranges"] = {t.value: list(r) for t, r in spec.n_ranges.items()}
    out["dense_fraction"] = {t.value: f for t, f in spec.dense_fraction.items()}
    out["lfr"] = {t.value: v for t, v in spec.lfr.items()}
    return out
