"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--sizes 20 40 80] [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from csagent import kernels
from csagent.graph import build_graph, connected_component

KERNELS = {
    "core_alive": lambda impl, g, q: impl.core_alive(g.n, *g.csr, 3),
    "truss_alive": lambda impl, g, q: impl.truss_alive(g.n, *g.csr, 4),
    "max_clique": lambda impl, g, q: impl.max_clique(g.n, *g.csr, q),
    "min_cut": lambda impl, g, q: impl.min_cut(g.n, *g.csr),
}


def connected_graph(rng, n, avg_degree):
    p = min(1.0, avg_degree / max(1, n - 1))
    while True:
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(iu.size) < p
        g = build_graph(n, zip(iu[keep].tolist(), ju[keep].tolist()))
        if len(connected_component(g, 0)) == n:
            return g


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def run(sizes, repeat, avg_degree=8.0, seed=0):
    rng = np.random.default_rng(seed)
    graphs = {n: connected_graph(rng, n, avg_degree) for n in sizes}
    rows = []
    for name, call in KERNELS.items():
        for n, g in graphs.items():
            row = {"kernel": name, "n": n, "edges": g.num_edges}
            for backend, impl in kernels.BACKENDS.items():
                row[backend] = best_of(lambda: call(impl, g, 0), repeat)
            rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 80, 160])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--avg-degree", type=float, default=8.0)
    args = ap.parse_args(argv)
    rows = run(args.sizes, args.repeat, args.avg_degree)
    have_c = "cython" in kernels.BACKENDS
    print(f"{'kernel':<12} {'n':>5} {'edges':>6} {'python ms':>10}" + (f" {'cython ms':>10} {'speedup':>8}" if have_c else ""))
    for r in rows:
        line = f"{r['kernel']:<12} {r['n']:>5} {r['edges']:>6} {1e3 * r['python']:>10.3f}"
        if have_c:
            line += f" {1e3 * r['cython']:>10.3f} {r['python'] / r['cython']:>7.1f}x"
        print(line)
    if not have_c:
        print("compiled kernels unavailable; only the fallback was timed")
    return rows


if __name__ == "__main__":
    main()
