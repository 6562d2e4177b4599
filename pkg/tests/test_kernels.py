import os
import subprocess
import sys

import numpy as np
import pytest

from csagent import kernels

from conftest import random_graph


def test_fallback_selected_by_env():
    code = "from csagent import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, CSAGENT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernels not built")
def test_raw_kernels_identical():
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(1, 30))
        g = random_graph(rng, n, float(rng.uniform(0.05, 0.8)))
        indptr, indices = g.csr
        for k in (1, 2, 3, 4):
            assert list(py.core_alive(n, indptr, indices, k)) == list(cy.core_alive(n, indptr, indices, k))
        for k in (3, 4, 5):
            assert list(py.truss_alive(n, indptr, indices, k)) == list(cy.truss_alive(n, indptr, indices, k))
        q = int(rng.integers(n))
        assert list(py.max_clique(n, indptr, indices, q)) == list(cy.max_clique(n, indptr, indices, q))
        if n >= 2:
            from csagent.graph import connected_component

            if len(connected_component(g, 0)) == n:
                a, b = py.min_cut(n, indptr, indices), cy.min_cut(n, indptr, indices)
                assert a[0] == b[0] and list(a[1]) == list(b[1])
