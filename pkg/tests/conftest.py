import numpy as np
import pytest
from hypothesis import strategies as st

from csagent import kernels
from csagent.graph import build_graph


def random_graph(rng, n, p):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return build_graph(n, list(zip(iu[keep].tolist(), ju[keep].tolist())))


@st.composite
def graphs(draw, min_n=1, max_n=10):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return build_graph(n, chosen)


@pytest.fixture(params=sorted(kernels.BACKENDS))
def kernel(request):
    return kernels.get_backend(request.param)


TRIANGLE = build_graph(3, [(0, 1), (1, 2), (0, 2)])
K4 = build_graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
K4_PENDANT = build_graph(5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4)])
