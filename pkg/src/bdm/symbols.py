"""Rational symbols in one frequency variable, symbol families and their
diagnostics.

Fourier convention: ``u_hat(xi) = int exp(-i x xi) u(x) dx`` with the
inverse carrying ``1/(2 pi)``.  Under it the truncated multiplier of a
symbol ``s`` of order <= 0 acts as ``s(inf) u + int k(x - y) u(y) dy``
with ``k = F^{-1}(s - s(inf))``, and for a pole ``p`` of multiplicity
``j``

    F^{-1}[(xi - p)^-j](z) =  i (iz)^(j-1)/(j-1)! e^{ipz}   (Im p > 0, z > 0)
                           = -i (iz)^(j-1)/(j-1)! e^{ipz}   (Im p < 0, z < 0)

and zero on the other half-line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import BadHbar, NonZeroOrder, SplitFailure
from .grid import group_action  # noqa: F401  (re-exported)

_REAL_AXIS_TOL = 1e-12
_POLE_MERGE_TOL = 1e-9


def _as_tuple(values) -> tuple:
    return tuple(complex(v) for v in values)


@dataclass(frozen=True)
class RationalSymbol:
    """``scale * prod(xi - z_j) / prod(xi - p_k)`` with no real zeros or poles."""

    scale: complex = 1.0
    zeros: tuple = ()
    poles: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "scale", complex(self.scale))
        object.__setattr__(self, "zeros", _as_tuple(self.zeros))
        object.__setattr__(self, "poles", _as_tuple(self.poles))
        for w in self.zeros + self.poles:
            if abs(w.imag) <= _REAL_AXIS_TOL * max(1.0, abs(w)):
                raise ValueError(f"zero/pole {w} lies on the real axis")

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, c: complex) -> "RationalSymbol":
        return cls(c)

    @classmethod
    def from_polys(cls, num: Sequence[complex], den: Sequence[complex]) -> "RationalSymbol":
        """Build from coefficient lists, highest power first."""
        num = np.trim_zeros(np.atleast_1d(np.asarray(num, dtype=complex)), "f")
        den = np.trim_zeros(np.atleast_1d(np.asarray(den, dtype=complex)), "f")
        if den.size == 0:
            raise ZeroDivisionError("zero denominator")
        if num.size == 0:
            return cls(0.0)
        return cls(num[0] / den[0], np.roots(num), np.roots(den))

    # basic data ---------------------------------------------------------
    @property
    def order(self) -> int:
        return len(self.zeros) - len(self.poles)

    @property
    def is_zero(self) -> bool:
        return self.scale == 0

    @property
    def at_infinity(self) -> complex:
        if self.is_zero or self.order < 0:
            return 0j
        if self.order == 0:
            return self.scale
        raise ValueError("symbol of positive order has no finite value at infinity")

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=complex)
        out = np.full(xi.shape, self.scale, dtype=complex)
        for z in self.zeros:
            out = out * (xi - z)
        for p in self.poles:
            out = out / (xi - p)
        return out

    def log_derivative(self, xi):
        """``s'(xi) / s(xi)``."""
        xi = np.asarray(xi, dtype=complex)
        out = np.zeros(xi.shape, dtype=complex)
        for z in self.zeros:
            out += 1.0 / (xi - z)
        for p in self.poles:
            out -= 1.0 / (xi - p)
        return out

    def derivative(self, xi):
        return self(xi) * self.log_derivative(xi)

    # algebra ------------------------------------------------------------
    def __mul__(self, other):
        if isinstance(other, RationalSymbol):
            if self.is_zero or other.is_zero:
                return RationalSymbol(0.0)
            return _cancel(RationalSymbol(self.scale * other.scale,
                                          self.zeros + other.zeros, self.poles + other.poles))
        return RationalSymbol(self.scale * complex(other), self.zeros, self.poles)

    __rmul__ = __mul__

    def inverse(self) -> "RationalSymbol":
        return RationalSymbol(1.0 / self.scale, self.poles, self.zeros)

    def __truediv__(self, other):
        if isinstance(other, RationalSymbol):
            return self * other.inverse()
        return RationalSymbol(self.scale / complex(other), self.zeros, self.poles)

    def __pow__(self, k: int):
        k = int(k)
        base = self if k >= 0 else self.inverse()
        return RationalSymbol(base.scale ** abs(k), base.zeros * abs(k), base.poles * abs(k))

    def adjoint(self) -> "RationalSymbol":
        """Symbol of the adjoint: ``conj(s(xi))`` for real ``xi``."""
        return RationalSymbol(np.conj(self.scale), np.conj(self.zeros), np.conj(self.poles))

    def scaled(self, hbar: float) -> "RationalSymbol":
        """``xi -> s(hbar xi)``."""
        return RationalSymbol(self.scale * hbar ** self.order,
                              tuple(z / hbar for z in self.zeros),
                              tuple(p / hbar for p in self.poles))

    def __add__(self, other):
        a_num, a_den = self.polys()
        if isinstance(other, RationalSymbol):
            b_num, b_den = other.polys()
        else:
            b_num, b_den = np.array([complex(other)]), np.array([1.0 + 0j])
        return RationalSymbol.from_polys(np.polyadd(np.polymul(a_num, b_den), np.polymul(b_num, a_den)),
                                         np.polymul(a_den, b_den))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def polys(self):
        """Numerator and denominator coefficients, highest power first."""
        num = self.scale * np.poly(self.zeros) if self.zeros else np.array([self.scale])
        den = np.poly(self.poles) if self.poles else np.array([1.0 + 0j])
        return num, den

    def is_minus_type(self) -> bool:
        """All zeros and poles in the lower half-plane."""
        return all(w.imag < 0 for w in self.zeros + self.poles)

    def is_plus_type(self) -> bool:
        return all(w.imag > 0 for w in self.zeros + self.poles)

    # polynomial split -----------------------------------------------------
    def split(self):
        """Return ``(poly, q)`` with ``s = poly(xi) + q`` and ``order(q) <= -1``.

        ``poly`` holds coefficients lowest power first.
        """
        num, den = self.polys()
        if self.is_zero:
            return np.zeros(1, dtype=complex), RationalSymbol(0.0)
        quo, rem = np.polydiv(num, den)
        rem = np.where(np.abs(rem) < 1e-14 * np.max(np.abs(num)), 0, rem)
        try:
            q = RationalSymbol.from_polys(rem, den)
        except ValueError as exc:
            raise SplitFailure(str(exc)) from exc
        return np.asarray(quo[::-1], dtype=complex), q

    # residue calculus ---------------------------------------------------
    def pole_groups(self):
        groups: list[list[complex]] = []
        for p in self.poles:
            for g in groups:
                if abs(g[0] - p) <= _POLE_MERGE_TOL * max(1.0, abs(p)):
                    g.append(p)
                    break
            else:
                groups.append([p])
        return [(sum(g) / len(g), len(g)) for g in groups]

    def partial_fractions(self):
        """Coefficients ``c[p] = [c_1, ..., c_m]`` with
        ``s = s(inf) + sum_p sum_j c_j / (xi - p)^j`` (order <= 0 only)."""
        if self.order > 0:
            raise ValueError("partial fractions need order <= 0")
        if self.is_zero:
            return {}
        groups = self.pole_groups()
        out = {}
        for p, m in groups:
            others = [w for w in self.poles if abs(w - p) > _POLE_MERGE_TOL * max(1.0, abs(p))]
            shift = np.polynomial.Polynomial([p, 1.0])
            num = np.polynomial.Polynomial.fromroots(self.zeros) if self.zeros else np.polynomial.Polynomial([1.0])
            den = np.polynomial.Polynomial.fromroots(others) if others else np.polynomial.Polynomial([1.0])
            n_c = np.zeros(m, dtype=complex)
            d_c = np.zeros(m, dtype=complex)
            nc = num(shift).coef
            dc = den(shift).coef
            n_c[: min(m, nc.size)] = nc[:m]
            d_c[: min(m, dc.size)] = dc[:m]
            taylor = np.zeros(m, dtype=complex)
            for k in range(m):
                acc = n_c[k] - sum(d_c[j] * taylor[k - j] for j in range(1, k + 1))
                taylor[k] = acc / d_c[0]
            # coefficient of (xi - p)^-(m - k) is taylor[k]
            out[p] = [self.scale * taylor[m - j] for j in range(1, m + 1)]
        return out

    def kernel(self, z, side: int = 0):
        """Inverse Fourier transform of ``s - s(inf)`` at ``z``.

        At ``z == 0`` the value is the one-sided limit selected by ``side``
        (+1 or -1) or their average for ``side == 0``.
        """
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape, dtype=complex)
        if self.is_zero:
            return out
        for p, coeffs in self.partial_fractions().items():
            upper = p.imag > 0
            for j, c in enumerate(coeffs, start=1):
                if c == 0:
                    continue
                term = c * (1j * z) ** (j - 1) / math.factorial(j - 1)
                if upper:
                    mask = z > 0
                    at0 = 1j * c if j == 1 else 0.0
                    sign_side = 1
                else:
                    mask = z < 0
                    at0 = -1j * c if j == 1 else 0.0
                    sign_side = -1
                vals = np.where(mask, (1j if upper else -1j) * term * np.exp(1j * p * np.where(mask, z, 0.0)), 0.0)
                zero = z == 0
                if np.any(zero):
                    weight = 1.0 if side == sign_side else (0.5 if side == 0 else 0.0)
                    vals = np.where(zero, weight * at0, vals)
                out = out + vals
        return out


def _cancel(s: RationalSymbol) -> RationalSymbol:
    zeros = list(s.zeros)
    poles = []
    for p in s.poles:
        for i, z in enumerate(zeros):
            if abs(z - p) <= _POLE_MERGE_TOL * max(1.0, abs(p)):
                zeros.pop(i)
                break
        else:
            poles.append(p)
    return RationalSymbol(s.scale, zeros, poles)


def moebius(power: int = 1, width: float = 1.0) -> RationalSymbol:
    """``((xi - i w)/(xi + i w))**power``; winding number ``power``."""
    return RationalSymbol(1.0, (1j * width,), (-1j * width,)) ** power


def eval_symbol(s, xi):
    return s(xi)


# winding numbers ---------------------------------------------------------

def residue_winding(s: RationalSymbol) -> int:
    """#zeros minus #poles in the upper half-plane."""
    return sum(1 for z in s.zeros if z.imag > 0) - sum(1 for p in s.poles if p.imag > 0)


def quadrature_winding(s: RationalSymbol, limit: int = 20000) -> float:
    """Total variation of ``arg s`` over the real line divided by ``2 pi``.

    The line is compactified by ``xi = tan(theta / 2)`` and the
    derivative of the argument is integrated adaptively in ``theta``.
    """
    def integrand(theta):
        xi = math.tan(theta / 2)
        dxi = 0.5 / math.cos(theta / 2) ** 2
        return float(np.imag(s.log_derivative(xi))) * dxi

    breaks = sorted({2 * math.atan(w.real) for w in s.zeros + s.poles})
    total, _ = integrate.quad(integrand, -math.pi, math.pi, limit=limit,
                              points=breaks or None, epsabs=1e-11, epsrel=1e-11)
    return total / (2 * math.pi)


def winding_number(s: RationalSymbol) -> int:
    if s.order != 0:
        raise NonZeroOrder(f"winding needs order 0, got {s.order}")
    quad = quadrature_winding(s)
    res = residue_winding(s)
    if abs(quad - res) > 1e-6:
        raise ArithmeticError(f"quadrature winding {quad} disagrees with residue count {res}")
    return res


# bump, bracket -------------------------------------------------------------

def bump(r):
    """``exp(1 - 1/(1 - r^2))`` on ``[0, 1)``, zero beyond; equals 1 at 0."""
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros(r.shape)
    inside = r < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class BracketFunction:
    """Smooth positive stand-in for ``|xi|`` which equals it for ``|xi| >= r0``."""

    r0: float = 1.0

    def __call__(self, xi):
        r = np.abs(np.asarray(xi, dtype=float))
        chi = bump(r / self.r0)
        return np.maximum(chi + (1 - chi) * r, 0.5)


# families -----------------------------------------------------------------

@dataclass(frozen=True)
class SmoothSlice:
    """A symbol in ``xi_n`` given by samples rather than zeros and poles."""

    func: Callable
    limit: complex
    margin: float = 1.0  # distance of nearest singularity from the real axis

    def __call__(self, xi):
        return np.asarray(self.func(np.asarray(xi, dtype=float)), dtype=complex)

    @property
    def at_infinity(self) -> complex:
        return self.limit


@dataclass(frozen=True)
class SymbolFamily:
    """``(x', xi') -> symbol in xi_n``; ``builder`` returns a RationalSymbol
    or a SmoothSlice."""

    name: str
    builder: Callable
    params: tuple = ()
    tangential_order: int = 0
    order: int = 0
    hbar: float = 1.0
    cutoff: BracketFunction | None = None
    center: complex | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def _raw(self, xp, xip):
        return self.builder(xp, xip)

    def raw_value(self, xp, xip, xin):
        """Unsmoothed value at ``(x', hbar xi', hbar xi_n)``."""
        s = self._raw(xp, self.hbar * xip)
        return s(self.hbar * np.asarray(xin, dtype=float))

    def eval(self, xp: float, xip: float):
        """Slice ``xi_n -> p(x', xi', xi_n)`` of the (scaled, smoothed) family."""
        base = self._raw(xp, self.hbar * xip)
        if self.cutoff is None:
            if self.hbar == 1.0:
                return base
            if isinstance(base, RationalSymbol):
                return base.scaled(self.hbar)
            h = self.hbar
            return SmoothSlice(lambda x, b=base: b(h * x), base.at_infinity, base.margin / h)
        return SmoothSlice(lambda x: self._smoothed(xp, xip, x), base.at_infinity,
                           getattr(base, "margin", None) or _margin(base) / self.hbar)

    def _smoothed(self, xp, xip, xin):
        r0 = self.cutoff.r0
        xin = np.atleast_1d(np.asarray(xin, dtype=float))
        a, b = self.hbar * xip, self.hbar * xin
        base = self._raw(xp, a)
        out = np.asarray(base(b), dtype=complex)
        r = np.hypot(a, b)
        inside = np.nonzero(r < r0)[0]
        if inside.size:
            center = self.center if self.center is not None else complex(self._raw(xp, 0.0)(0.0))
            chi = bump(r[inside] / r0)
            for k, idx in enumerate(inside):
                if r[idx] == 0:
                    ray = center
                else:
                    t = r0 / r[idx]
                    ray = complex(self._raw(xp, a * t)(b[idx] * t))
                out[idx] = chi[k] * center + (1 - chi[k]) * ray
        return out

    def value(self, xp, xip, xin):
        return self.eval(xp, xip)(xin)


def _margin(s) -> float:
    if isinstance(s, RationalSymbol) and s.poles:
        return min(abs(p.imag) for p in s.poles)
    return getattr(s, "margin", 1.0)


def smooth_near_zero(fam: SymbolFamily, cutoff: BracketFunction | None = None,
                     center: complex | None = None) -> SymbolFamily:
    """Blend the family with its values at radius ``r0`` along rays.

    Inside the ball of radius ``r0`` the value is
    ``bump(r/r0) * center + (1 - bump(r/r0)) * p(r0 * xi / r)``;
    outside it is left alone.  ``center`` defaults to the value at the
    origin, which keeps the slice through the origin homotopic to the
    unsmoothed one whenever that slice is elliptic.
    """
    cutoff = cutoff or BracketFunction()
    return SymbolFamily(fam.name + "~", fam.builder, fam.params, fam.tangential_order, fam.order,
                        fam.hbar, cutoff, center, dict(fam.meta))


def scale_semiclassical(fam: SymbolFamily, hbar: float) -> SymbolFamily:
    """``(x, xi) -> fam(x, hbar xi)``."""
    if not 0 < hbar <= 1:
        raise BadHbar(f"hbar must lie in (0, 1], got {hbar}")
    return SymbolFamily(fam.name, fam.builder, fam.params, fam.tangential_order, fam.order,
                        fam.hbar * hbar, fam.cutoff, fam.center, dict(fam.meta))


def scale_symbol(s: RationalSymbol, hbar: float) -> RationalSymbol:
    if not 0 < hbar <= 1:
        raise BadHbar(f"hbar must lie in (0, 1], got {hbar}")
    return s.scaled(hbar)


# seminorm diagnostic ---------------------------------------------------------

@dataclass
class DecayReport:
    sup_ratio: float
    exponent: float
    failed: bool
    samples: np.ndarray
    ratios: np.ndarray


def seminorm_diagnostic(symbol, alpha: int, mu: int, xi_samples=None) -> DecayReport:
    """Sample ``|D^alpha s(xi)| <xi>^(alpha - mu)`` and fit its growth.

    Derivatives use central differences with step ``1e-3 <xi>``. The
    fitted exponent is the slope of ``log ratio`` against ``log <xi>`` over
    the samples with ``|xi| >= 10``; it should not exceed 0.
    """
    if xi_samples is None:
        xi_samples = np.concatenate([-np.logspace(3, -1, 200), np.logspace(-1, 3, 200)])
    xi = np.asarray(xi_samples, dtype=float)
    br = BracketFunction()(xi)
    step = 1e-3 * br
    vals = np.zeros(xi.shape, dtype=complex)
    for k in range(alpha + 1):
        coeff = math.comb(alpha, k) * (-1) ** k
        vals += coeff * np.asarray(symbol(xi + (alpha / 2 - k) * step), dtype=complex)
    deriv = vals / step ** alpha * (-1j) ** alpha
    ratio = np.abs(deriv) * br ** (alpha - mu)
    far = np.abs(xi) >= 10
    if np.count_nonzero(far) >= 2 and np.all(ratio[far] > 0):
        slope = np.polyfit(np.log(br[far]), np.log(ratio[far]), 1)[0]
    else:
        slope = -np.inf if np.all(ratio[far] == 0) else 0.0
    return DecayReport(float(ratio.max()), float(slope), bool(slope > 0.2), xi, ratio)
