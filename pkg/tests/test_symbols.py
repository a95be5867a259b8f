import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bdm.errors import BadHbar, NonZeroOrder
from bdm.symbols import (BracketFunction, RationalSymbol, bump, moebius, quadrature_winding,
                         residue_winding, scale_symbol, seminorm_diagnostic, winding_number)

off_axis = st.builds(complex, st.floats(-3, 3),
                     st.one_of(st.floats(0.2, 3), st.floats(-3, -0.2)))


def test_moebius_values():
    m = moebius(1)
    assert m(0.0) == pytest.approx(-1.0)
    assert m(1.0) == pytest.approx((1 - 1j) / (1 + 1j))
    assert abs(m(np.linspace(-50, 50, 101))).max() == pytest.approx(1.0)


@pytest.mark.parametrize("w", range(-3, 4))
def test_winding_routes_agree(w):
    s = moebius(w)
    assert residue_winding(s) == w
    assert quadrature_winding(s) == pytest.approx(w, abs=1e-9)
    assert winding_number(s) == w


def test_winding_requires_order_zero():
    with pytest.raises(NonZeroOrder):
        winding_number(RationalSymbol(1.0, (), (1j,)))


def test_mixed_symbol_has_zero_winding():
    s = RationalSymbol(1.0, (2j, -0.5j), (1j, -2j))
    assert winding_number(s) == 0


def test_kernel_of_moebius():
    # (xi - i)/(xi + i) = 1 - 2i/(xi + i): kernel -2 e^z on z < 0
    k = moebius(1).kernel(np.array([-2.0, -0.5, 0.5]))
    assert np.allclose(k, [-2 * math.exp(-2.0), -2 * math.exp(-0.5), 0.0])


def test_partial_fractions_double_pole():
    s = RationalSymbol(1.0, (), (1j, 1j))
    pf = s.partial_fractions()
    (p, c), = pf.items()
    assert p == pytest.approx(1j)
    assert np.allclose(c, [0.0, 1.0])


def test_split_polynomial_part():
    s = RationalSymbol(2.0, (1j, 2j), (-1j,))
    poly, q = s.split()
    xi = np.linspace(-4, 4, 9)
    assert np.allclose(np.polyval(poly[::-1], xi) + q(xi), s(xi))
    assert q.order <= -1


@given(st.lists(off_axis, max_size=3), st.lists(off_axis, max_size=3), st.floats(-5, 5))
def test_product_is_pointwise(zs, ps, x):
    a = RationalSymbol(1.5, zs, ps)
    b = moebius(2) * RationalSymbol(0.5 - 1j, (), (2j,))
    assert np.isclose((a * b)(x), a(x) * b(x), rtol=1e-9, atol=1e-12)


@given(st.integers(-3, 3), st.integers(-3, 3))
def test_winding_is_additive(j, k):
    s = moebius(j) * moebius(k, 2.0)
    assert winding_number(s) == j + k


@given(st.lists(off_axis, min_size=1, max_size=3))
def test_adjoint_is_conjugate(zs):
    s = RationalSymbol(0.3 + 2j, zs, tuple(z.conjugate() * 1.5 for z in zs))
    xi = np.linspace(-3, 3, 7)
    assert np.allclose(s.adjoint()(xi), np.conj(s(xi)))


def test_bump_and_bracket():
    assert bump(0.0) == 1.0
    assert bump(1.0) == 0.0
    assert bump(0.5) == pytest.approx(math.exp(1 - 1 / 0.75))
    br = BracketFunction(1.0)
    assert br(3.0) == 3.0
    assert br(0.0) == 1.0


def test_scaling_rejects_bad_hbar():
    with pytest.raises(BadHbar):
        scale_symbol(moebius(1), 0.0)
    assert scale_symbol(moebius(1), 0.5)(1.0) == pytest.approx(moebius(1)(0.5))


def test_seminorm_of_order_zero_symbol():
    rep = seminorm_diagnostic(moebius(1), alpha=1, mu=0)
    assert not rep.failed
    assert rep.exponent < 0.2
