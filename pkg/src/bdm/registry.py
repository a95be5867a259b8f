"""Built-in symbols, kernels and cylinder families used by the experiments."""
from __future__ import annotations

import numpy as np

from .halfline import GreenKernel
from .symbols import RationalSymbol, SymbolFamily, bump, moebius

MOEBIUS_POWERS = tuple(range(-3, 4))


def minus_type(width: float = 1.0) -> RationalSymbol:
    """``1 - 2i w / (xi + i w)``, i.e. ``(xi - i w) / (xi + i w)``."""
    return moebius(1, width)


def order_minus_one(center: complex) -> RationalSymbol:
    """``1 / (xi - center)``."""
    return RationalSymbol(1.0, (), (complex(center),))


def mixed_symbol() -> RationalSymbol:
    """Order 0, winding 0, poles on both sides of the real axis."""
    return RationalSymbol(1.0, (2j, -0.5j), (1j, -2j))


def builtin_symbols() -> dict:
    out = {f"moebius{w:+d}": moebius(w) for w in MOEBIUS_POWERS}
    out["constant"] = RationalSymbol.constant(2.0)
    out["mixed"] = mixed_symbol()
    out["wide-moebius"] = moebius(1, 2.5)
    out["moebius-squared-mixed"] = moebius(2) * mixed_symbol()
    return out


def builtin_pairs() -> list:
    """Order <= 0 pairs for the leftover and commutator checks."""
    m = moebius
    return [
        ("moebius,moebius^-1", m(1), m(-1)),
        ("moebius^-1,moebius", m(-1), m(1)),
        ("resolvent-pair", RationalSymbol.constant(1.0) + order_minus_one(-1j) * -2j,
         RationalSymbol.constant(1.0) + order_minus_one(1j) * -2j),
        ("mixed,moebius^2", mixed_symbol(), m(2)),
        ("wide,mixed", m(1, 2.5), mixed_symbol()),
        ("order-1,order-1", order_minus_one(-0.5j), order_minus_one(1.5j)),
        ("moebius^3,wide^-2", m(3), m(-2, 2.5)),
    ]


def builtin_green() -> dict:
    return {
        "zero": GreenKernel(),
        "exp": GreenKernel(((0.25, -1.0, -1.0),)),
        "two-term": GreenKernel(((0.3, -1.0, -2.0), (0.2j, -1.5, -0.5))),
    }


# cylinder families -------------------------------------------------------------

def _bracket(xip):
    return float(np.sqrt(1.0 + xip ** 2))


def winding_factor(xip: float, width: float = 1.0) -> RationalSymbol:
    """Winding-0 factor that makes every block depend on ``xi'``."""
    b = width * _bracket(xip)
    return RationalSymbol(1.0, (2j * b, -1j * b), (-2j * b, 1j * b))


def concentrated_family(w: int, gamma: float = 0.25, width: float = 1.5):
    """Elliptic cylinder family whose index ``w`` sits in the ``n = 0`` block.

    ``p(xi', xi_n) = ((xi_n - i a b) / (xi_n + i b))^w r(xi', xi_n)`` with
    ``a = 2 bump(|xi'|) - 1`` and ``b = width``, so ``a = 1`` at ``xi' = 0``
    and ``a = -1`` for ``|xi'| >= 1``.  The Green part is
    ``gamma <xi'> exp(-<xi'>(x+y))``.  Returns ``(family, green)`` where
    ``green(xi')`` gives the kernel.

    The width keeps the phase of the ``n = 0`` slice slowly varying near
    ``xi = 0``, so that smoothing inside a ball of radius below 1 does not
    change its winding.
    """

    def builder(xp, xip, w=w, b=width):
        a = 2.0 * float(bump(abs(xip))) - 1.0
        r = winding_factor(xip, b)
        if w == 0 or abs(a + 1.0) < 1e-15:
            return r
        if abs(a) < 1e-9:
            a = 1e-9
        base = RationalSymbol(1.0, (1j * a * b,), (-1j * b,))
        return base ** w * r

    def green(xip, gamma=gamma):
        c = _bracket(xip)
        return GreenKernel(((gamma * c, -c, -c),))

    fam = SymbolFamily(f"concentrated{w:+d}", builder, (w, gamma, width), meta={"index": w})
    return fam, green


CYLINDER_INDICES = (-2, -1, 0, 1, 2)


def builtin_families() -> dict:
    return {f"concentrated{w:+d}": concentrated_family(w) for w in CYLINDER_INDICES}


# semiclassical model ----------------------------------------------------------

def interior_cutoff(x, lo: float = 0.5, hi: float = 9.5):
    """Smooth bump supported in ``[lo, hi]``."""
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return bump((np.asarray(x, dtype=float) - mid) / rad)


def field_family(eps: float = 0.5):
    """``p(x, xi', xi) = m(xi', xi) + eps psi(x) / (1 + xi'^2 + xi^2)`` where
    ``m = (xi - i<xi'>) / (xi + i<xi'>)`` is unimodular, and ``psi`` is
    supported away from the boundary, so ``|p| >= 1 - eps``."""

    def principal(xip):
        b = _bracket(xip)
        return RationalSymbol(1.0, (1j * b,), (-1j * b,))

    def perturbation(xip):
        b2 = 1.0 + xip ** 2
        s = np.sqrt(b2)
        return RationalSymbol(eps, (), (1j * s, -1j * s))

    def green(xip, gamma=0.25):
        b = _bracket(xip)
        return GreenKernel(((gamma * b, -b, -b),))

    return principal, perturbation, green
