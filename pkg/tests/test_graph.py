import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from bdm import graph
from bdm.errors import GapViolation

entries = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


def matrices(max_side=8):
    shapes = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shapes.flatmap(lambda s: hnp.arrays(complex, s, elements=entries))


def test_graph_of_zero_is_reference_complement():
    gr = graph.graph_projection(np.zeros((2, 3)))
    assert np.allclose(gr.matrix, np.diag([1, 1, 1, 0, 0]))


def test_graph_of_scalar():
    # a = 2: Gr = [[1/5, 2/5], [2/5, 4/5]]
    gr = graph.graph_projection(2.0)
    assert np.allclose(gr.matrix, [[0.2, 0.4], [0.4, 0.8]])


@given(matrices())
def test_graph_projection_is_orthogonal_projection(a):
    gr = graph.graph_projection(a)
    scale = gr.norm()
    assert gr.idempotent_defect() <= 1e-10 * scale
    assert gr.selfadjoint_defect() <= 1e-10 * scale
    assert gr.block_identity_defect(a) <= 1e-10


@given(matrices())
def test_graph_range_is_graph(a):
    gr = graph.graph_projection(a)
    n = a.shape[1]
    v = np.arange(1, n + 1) + 0.5j
    w = np.r_[v, a @ v]
    assert np.allclose(gr.matrix @ w, w, atol=1e-9 * (1 + np.linalg.norm(w)))


@given(matrices(6))
def test_trace_index_is_shape_difference(a):
    # unweighted trace formula: dim ker a - dim ker a* = n - m
    m, n = a.shape
    assert graph.trace_index(a) == pytest.approx(n - m, abs=1e-8)


def test_svd_index_counts_rank_deficiency():
    a = np.diag([1.0, 2.0, 0.0])
    assert graph.svd_index(a, tol=1e-6) == 0
    b = np.array([[1.0, 0.0, 0.0]])
    assert graph.svd_index(b) == 2


def test_svd_index_gap_guard():
    with pytest.raises(GapViolation):
        graph.svd_index(np.diag([1.0, 5e-4]), tol=1e-4)


def test_weighted_trace_on_shift():
    # forward shift on C^N: kernel is spanned by the last basis vector
    N = 40
    S = np.eye(N, k=-1)
    w = (np.arange(N) >= N // 2).astype(float)
    assert graph.svd_index(S, region=w) == 1
    assert graph.trace_index(S, w, 1e4) == pytest.approx(1.0, abs=1e-6)


def test_graph_limit_defect():
    a = np.array([[1.0, 0.0]])
    assert graph.graph_limit_defect(a, 100.0) < 1e-3
    assert graph.graph_limit_defect(a, 100.0, full=True) == pytest.approx(1e-2, rel=1e-3)
    with pytest.raises(ValueError):
        graph.graph_limit_defect(a, 0.5)


@given(st.floats(1.0, 1e3))
def test_graph_limit_diagonal_decays_quadratically(t):
    a = np.array([[2.0, 0.0], [0.0, 0.0]])
    assert graph.graph_limit_defect(a, t) <= 1.0 / (1 + 4 * t ** 2) + 1e-14


def test_direct_sum_index_is_additive():
    a = np.eye(3, 4)
    b = np.eye(5, 2)
    assert graph.svd_index(graph.direct_sum(a, b)) == graph.svd_index(a) + graph.svd_index(b)


def test_opnorm_small_large_and_zero():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(300, 280))
    assert graph.opnorm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-9)
    assert graph.opnorm(np.zeros((400, 400))) == 0.0
    assert graph.graph_projection(np.zeros((70, 70))).selfadjoint_defect() == 0.0
