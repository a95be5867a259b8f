"""Midpoint grids on the half-line and the dilation group acting on them."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class HalfLineGrid:
    """Uniform midpoint grid ``x_j = (j + 1/2) L / N`` on ``[0, L]``."""

    N: int = 512
    L: float = 40.0

    def __post_init__(self):
        if self.N < 1 or not self.L > 0:
            raise ValueError(f"invalid grid N={self.N}, L={self.L}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.h

    def scaled(self, factor: float) -> "HalfLineGrid":
        """Same number of nodes, length multiplied by ``factor``."""
        return HalfLineGrid(self.N, self.L * factor)

    def padded(self, factor: int = 2) -> "HalfLineGrid":
        """Grid with the same spacing and ``factor`` times as many nodes."""
        return HalfLineGrid(self.N * factor, self.L * factor)

    def boundary_weight(self, fraction: float = 0.5) -> np.ndarray:
        """Indicator of the nodes in ``[0, fraction * L]``.

        The far end of a truncated grid behaves like a second, mirrored
        boundary; quantities attached to the true boundary at 0 are read
        off with this weight.
        """
        return (self.nodes <= fraction * self.L).astype(float)

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return self.h * np.vdot(u, v)

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(self.h) * np.linalg.norm(u))


@dataclass(frozen=True)
class SampledFunction:
    grid: HalfLineGrid
    values: np.ndarray

    def norm(self) -> float:
        return self.grid.norm(self.values)


def is_dyadic(lam: float) -> bool:
    frac = Fraction(lam).limit_denominator(1 << 30)
    if abs(float(frac) - lam) > 1e-15 * max(1.0, lam):
        return False
    num, den = frac.numerator, frac.denominator
    return (num & (num - 1) == 0 and den == 1) or (num == 1 and den & (den - 1) == 0)


def group_action(lam: float, u: SampledFunction, target: HalfLineGrid | None = None) -> SampledFunction:
    """Apply ``(kappa_lam u)(x) = lam**0.5 * u(lam * x)``.

    Without ``target`` the result lives on the grid of length ``L / lam``;
    node ``j`` of the new grid is mapped onto node ``j`` of the old one, so
    the map is an exact relabelling (and exactly unitary). With a
    ``target`` grid the samples are moved by cubic spline interpolation,
    error O(h**3) for smooth ``u``; points beyond the old grid get zero.
    """
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    if target is None:
        return SampledFunction(u.grid.scaled(1.0 / lam), np.sqrt(lam) * u.values)
    x_old = u.grid.nodes
    x_new = lam * target.nodes
    values = np.zeros(target.N, dtype=complex)
    inside = x_new <= x_old[-1]
    spline_re = CubicSpline(x_old, u.values.real, extrapolate=True)
    spline_im = CubicSpline(x_old, np.imag(u.values), extrapolate=True)
    values[inside] = spline_re(x_new[inside]) + 1j * spline_im(x_new[inside])
    return SampledFunction(target, np.sqrt(lam) * values)
