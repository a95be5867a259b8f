import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bdm import halfline as hl
from bdm.errors import BadOrder, NumericalFailure, PositiveClass, PositiveOrder, SplitFailure
from bdm.grid import HalfLineGrid, SampledFunction, group_action, is_dyadic
from bdm.registry import builtin_green, builtin_pairs, builtin_symbols, order_minus_one
from bdm.symbols import RationalSymbol, moebius

G256 = HalfLineGrid(256, 20.0)


def test_wiener_hopf_of_constant_is_scalar():
    W = hl.wiener_hopf(RationalSymbol.constant(2.0), G256).matrix
    assert np.allclose(W, 2 * np.eye(G256.N))


def test_moebius_kernel_vector():
    # W(moebius) annihilates e^{-x} up to the grid error; W(moebius^-1) is isometric
    W = hl.wiener_hopf(moebius(1), G256).matrix
    s = np.linalg.svd(W, compute_uv=False)
    assert s[-1] < 1e-6
    assert s[-2] > 0.5
    Winv = hl.wiener_hopf(moebius(-1), G256).matrix
    near = G256.boundary_weight() > 0
    assert np.allclose((Winv.conj().T @ Winv)[np.ix_(near, near)], np.eye(near.sum()), atol=1e-8)


def test_positive_order_rejected():
    with pytest.raises(PositiveOrder):
        hl.wiener_hopf(RationalSymbol(1.0, (1j,), ()), G256)


def test_sampled_kernel_agrees_to_second_order():
    s = moebius(1)
    errs = []
    for N in (128, 256):
        g = HalfLineGrid(N, 20.0)
        d = hl.wiener_hopf(s, g).matrix - hl.sampled_kernel_operator(s, g).matrix
        errs.append(np.abs(d).max())
    assert errs[1] < errs[0] / 3


def test_green_kernel_matrix_and_scaling():
    k = hl.GreenKernel(((0.25, -1.0, -1.0),))
    M = hl.green_from_kernel(k, G256).matrix
    x = G256.nodes
    assert M[3, 5] == pytest.approx(G256.h * 0.25 * np.exp(-x[3] - x[5]))
    ks = k.scaled(0.5)
    assert ks(1.0, 1.0) == pytest.approx(2 * 0.25 * np.exp(-4.0))
    assert k.adjoint()(0.3, 0.7) == pytest.approx(np.conj(k(0.7, 0.3)))


def test_g_plus_minus_order_check():
    with pytest.raises(BadOrder):
        hl.g_plus_minus(moebius(1), 1)
    kp = hl.g_plus_minus(order_minus_one(-1j), 1)
    assert kp(0.5, 0.5) == pytest.approx(0.0)
    km = hl.g_plus_minus(order_minus_one(-1j), -1)
    # kernel of 1/(xi + i) is -i e^{z} on z < 0
    assert km(0.5, 0.5) == pytest.approx(-1j * np.exp(-1.0))


@pytest.mark.parametrize("name,p,q", builtin_pairs())
def test_leftover_routes_agree(name, p, q):
    L = hl.leftover(p, q, G256)
    assert L.meta["self_check"] < 1e-10


def test_leftover_frozen_value():
    # L(m^-1, m) for m = (xi-i)/(xi+i) is rank one: -2 e^{-x} (x) e^{-y}
    L = hl.leftover(moebius(-1), moebius(1), G256).matrix
    s = np.linalg.svd(L, compute_uv=False)
    assert s[0] == pytest.approx(1.0, abs=1e-3)
    assert s[1] < 1e-10


def test_leftover_positive_order_split_failure():
    with pytest.raises(SplitFailure):
        hl.leftover(RationalSymbol(1.0, (1j,), ()), moebius(1), G256)


def test_far_leftover_completes_finite_section():
    p, q = moebius(2), builtin_symbols()["mixed"]
    T = lambda s: hl.wiener_hopf(s, G256).matrix  # noqa: E731
    lhs = T(p * q) - T(p) @ T(q)
    rhs = hl.structural_leftover(p, q, G256) + hl.far_leftover(p, q, G256)
    assert np.abs(lhs - rhs).max() < 1e-12


@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_leftover_of_minus_and_plus_types(a, b):
    # (minus)(anything) and (anything)(plus) have no leftover
    minus = RationalSymbol(1.0, (-1j * a,), (-1j * b,))
    plus = RationalSymbol(1.0, (1j * a,), (1j * b,))
    g = HalfLineGrid(64, 10.0)
    assert np.abs(hl.structural_leftover(minus, moebius(1), g)).max() < 1e-10
    assert np.abs(hl.structural_leftover(moebius(1), plus, g)).max() < 1e-10


def test_trace_gamma_on_exponential():
    g = HalfLineGrid(512, 40.0)
    u = np.exp(-g.nodes)
    assert (hl.trace_gamma(0, g).matrix @ u)[0] == pytest.approx(1.0, abs=1e-8)
    assert (hl.trace_gamma(1, g).matrix @ u)[0] == pytest.approx(1j, abs=1e-7)


def test_resolvent_decomposition_remainder_is_low_rank():
    p = moebius(1)
    c = hl.boundary_symbol(p, builtin_green()["exp"], HalfLineGrid(512, 40.0))
    pseudo, rem = hl.resolvent_decompose(c, p)
    s = np.linalg.svd(rem.matrix, compute_uv=False)
    assert s[19] / s[0] < 1e-6


def test_resolvent_symbol_is_rational():
    r = hl.resolvent_symbol(moebius(1))
    assert r(0.7) == pytest.approx(0.5)


def test_non_finite_operator_rejected():
    with pytest.raises(NumericalFailure):
        hl.HalfLineOperator(np.full((3, 3), np.nan), G256)


def test_adjoint_and_class():
    W = hl.wiener_hopf(moebius(1), G256)
    assert np.allclose(hl.adjoint(W).matrix, W.matrix.conj().T)
    with pytest.raises(PositiveClass):
        hl.adjoint(hl.trace_gamma(0, G256))


def test_lowrank_green():
    G = hl.green_from_kernel(builtin_green()["two-term"], G256)
    approx = hl.green_lowrank_approx(G, 2)
    assert approx.meta["approximation_error"] < 1e-10


def test_operator_roundtrip(tmp_path):
    op = hl.boundary_symbol(moebius(1), builtin_green()["exp"], G256)
    path = tmp_path / "op.npz"
    hl.save_operator(op, path)
    back = hl.load_operator(path)
    assert back.grid == op.grid
    assert np.array_equal(back.matrix, op.matrix)


def test_group_action_is_unitary_relabelling():
    u = SampledFunction(G256, np.exp(-G256.nodes))
    v = group_action(0.5, u)
    assert v.grid.L == pytest.approx(40.0)
    assert v.norm() == pytest.approx(u.norm())
    assert is_dyadic(0.25) and is_dyadic(4.0) and not is_dyadic(0.3)
