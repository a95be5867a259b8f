"""Operators on the half-line grid: truncated multipliers, singular Green,
trace and potential operators, leftover terms and resolvent structure.

Truncated multipliers are discretized as sections of Toeplitz matrices whose
generating function is the symbol pulled back to the circle by

    xi(theta) = (2 / h) tan(theta / 2).

For a symbol of order <= 0 this is a continuous function on the circle, and
the entries ``t_n`` approximate ``h k(n h)`` with ``k`` the convolution
kernel (O(h^2)).  Because pulling back is multiplicative, the bi-infinite
Toeplitz matrices form an exact algebra homomorphism; the half-line
identities (leftover, commutator traces) then hold on the grid with no
quadrature error.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import (BadOrder, NumericalFailure, PositiveClass, PositiveOrder,
                     SingularResolvent, SplitFailure)
from .grid import HalfLineGrid
from .symbols import RationalSymbol, SmoothSlice


class Kind(str, enum.Enum):
    TRUNCATED = "truncated-psdo"
    SINGULAR_GREEN = "singular-green"
    POTENTIAL = "potential"
    TRACE = "trace"
    COMPOSITE = "composite"


@dataclass
class HalfLineOperator:
    matrix: np.ndarray
    grid: HalfLineGrid
    order: int = 0
    cls: int = 0
    kind: Kind = Kind.COMPOSITE
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if not np.all(np.isfinite(self.matrix)):
            raise NumericalFailure("non-finite operator entries", check="halfline-finite")

    def __matmul__(self, other: "HalfLineOperator") -> "HalfLineOperator":
        return HalfLineOperator(self.matrix @ other.matrix, self.grid, self.order + other.order,
                                max(other.cls, self.cls + other.order), Kind.COMPOSITE)

    def __add__(self, other: "HalfLineOperator") -> "HalfLineOperator":
        return HalfLineOperator(self.matrix + other.matrix, self.grid, max(self.order, other.order),
                                max(self.cls, other.cls), Kind.COMPOSITE)

    def __sub__(self, other: "HalfLineOperator") -> "HalfLineOperator":
        return HalfLineOperator(self.matrix - other.matrix, self.grid, max(self.order, other.order),
                                max(self.cls, other.cls), Kind.COMPOSITE)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


# symbols on the circle -------------------------------------------------------

def cayley_frequencies(h: float, M: int) -> np.ndarray:
    """``xi(theta_k)`` for ``theta_k = 2 pi k / M``; entry ``M/2`` is infinite."""
    theta = 2 * np.pi * np.arange(M) / M
    with np.errstate(over="ignore", divide="ignore"):
        xi = (2.0 / h) * np.tan(theta / 2)
    xi[M // 2] = np.inf
    return xi


def _sample_size(symbol, h: float, count: int) -> int:
    """FFT length: enough to resolve ``count`` coefficients and the decay
    set by the singularity closest to the unit circle."""
    M = 4 * count
    if isinstance(symbol, RationalSymbol):
        sing = [p for p in symbol.poles]
    else:
        sing = [1j * getattr(symbol, "margin", 1.0)]
        M = 16 * count
    a = 2.0 / h
    for p in sing:
        z = abs((1j * a - p) / (1j * a + p))
        rate = abs(math.log(min(z, 1 / z))) if z != 1 else 1e-6
        M = max(M, int(60.0 / max(rate, 1e-6)))
    return 1 << int(math.ceil(math.log2(min(M, 1 << 22))))


def symbol_on_circle(symbol, xi: np.ndarray) -> np.ndarray:
    finite = np.isfinite(xi)
    out = np.empty(xi.shape, dtype=complex)
    out[finite] = symbol(xi[finite])
    out[~finite] = symbol.at_infinity
    return out


def toeplitz_coefficients(symbol, h: float, count: int) -> Callable[[np.ndarray], np.ndarray]:
    """Return ``n -> t_n`` valid for ``|n| < count``."""
    M = _sample_size(symbol, h, count)
    coeffs = np.fft.ifft(symbol_on_circle(symbol, cayley_frequencies(h, M)))

    def t(n):
        return coeffs[np.mod(np.asarray(n), M)]

    return t


def check_order(symbol):
    if isinstance(symbol, RationalSymbol) and not symbol.is_zero and symbol.order > 0:
        raise PositiveOrder(f"truncated multiplier needs order <= 0, got {symbol.order}")


def wiener_hopf(symbol, grid: HalfLineGrid) -> HalfLineOperator:
    """Truncated Fourier multiplier ``r+ op(symbol) e+`` on the grid."""
    check_order(symbol)
    n = np.arange(grid.N)
    t = toeplitz_coefficients(symbol, grid.h, grid.N)
    order = symbol.order if isinstance(symbol, RationalSymbol) and not symbol.is_zero else 0
    return HalfLineOperator(sla.toeplitz(t(n), t(-n)), grid, order, 0, Kind.TRUNCATED)


def sampled_kernel_operator(s: RationalSymbol, grid: HalfLineGrid) -> HalfLineOperator:
    """``s(inf) I + h [k(x_i - x_j)]`` with the two-sided average on the
    diagonal; second-order accurate, used as a cross-check."""
    check_order(s)
    x = grid.nodes
    z = x[:, None] - x[None, :]
    mat = grid.h * s.kernel(z, side=0) + s.at_infinity * np.eye(grid.N)
    return HalfLineOperator(mat, grid, s.order, 0, Kind.TRUNCATED)


def left_quantize(symbol: Callable, grid: HalfLineGrid, limit: Callable | None = None,
                  M: int | None = None, rows=None) -> HalfLineOperator:
    """Truncated operator of an ``x``-dependent symbol ``a(x, xi)``.

    Row ``i`` uses the Toeplitz coefficients of ``xi -> a(x_i, xi)``.
    ``limit(x)`` gives the value at ``xi = inf``; by default it is taken
    from a large-``xi`` sample.  With ``rows`` only those rows are filled
    and the rest of the matrix is zero.
    """
    M = M or 16 * grid.N
    rows = np.arange(grid.N) if rows is None else np.asarray(rows)
    x, xi = grid.nodes[rows], cayley_frequencies(grid.h, M)
    finite = np.isfinite(xi)
    vals = np.empty((rows.size, M), dtype=complex)
    vals[:, finite] = symbol(x[:, None], xi[None, finite])
    inf_val = limit(x) if limit is not None else symbol(x, np.full(x.shape, 1e12))
    vals[:, ~finite] = np.asarray(inf_val, dtype=complex).reshape(-1, 1)
    return HalfLineOperator(quantize_samples(vals, grid, rows), grid, 0, 0, Kind.TRUNCATED)


def quantize_samples(vals: np.ndarray, grid: HalfLineGrid, rows) -> np.ndarray:
    """Rows ``rows`` of the left quantization from samples ``vals[r, k]`` of
    the symbol at ``(x_rows[r], xi(theta_k))``; other rows are zero."""
    rows = np.asarray(rows)
    M = vals.shape[1]
    coeffs = np.fft.ifft(vals, axis=1)
    cols = np.arange(grid.N)
    idx = np.mod(rows[:, None] - cols[None, :], M)
    mat = np.zeros((grid.N, grid.N), dtype=complex)
    mat[rows] = np.take_along_axis(coeffs, idx, axis=1)
    return mat


def sampled_wiener_hopf(samples: np.ndarray, size: int) -> np.ndarray:
    """Toeplitz section whose generating function is given on the DFT
    frequencies ``theta_k = 2 pi k / M`` (FFT order), ``theta = h xi``."""
    coeffs = np.fft.ifft(np.asarray(samples, dtype=complex))
    M = coeffs.size
    n = np.arange(size)
    return sla.toeplitz(coeffs[n % M], coeffs[(-n) % M])


# singular Green ------------------------------------------------------------

@dataclass(frozen=True)
class GreenKernel:
    """Kernel ``k(x, y)`` on the quarter plane.

    Either a closed-form exponential sum ``sum c e^{a x} e^{b y}`` (``terms``
    of ``(c, a, b)`` with ``Re a, Re b < 0``) or a vectorized callable.
    """

    terms: tuple = ()
    func: Callable | None = None

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for c, a, b in self.terms:
            out = out + c * np.exp(a * x + b * y)
        if self.func is not None:
            out = out + self.func(x, y)
        return out

    @classmethod
    def zero(cls) -> "GreenKernel":
        return cls()

    def scaled(self, hbar: float) -> "GreenKernel":
        """Kernel of ``kappa_hbar^{-1} g kappa_hbar``: ``k(x/h, y/h) / h``."""
        terms = tuple((c / hbar, a / hbar, b / hbar) for c, a, b in self.terms)
        f = None
        if self.func is not None:
            base = self.func
            f = lambda x, y: base(x / hbar, y / hbar) / hbar  # noqa: E731
        return GreenKernel(terms, f)

    def adjoint(self) -> "GreenKernel":
        terms = tuple((np.conj(c), np.conj(b), np.conj(a)) for c, a, b in self.terms)
        f = None
        if self.func is not None:
            base = self.func
            f = lambda x, y: np.conj(base(y, x))  # noqa: E731
        return GreenKernel(terms, f)

    def is_zero(self) -> bool:
        return not self.terms and self.func is None


def green_from_kernel(k: GreenKernel, grid: HalfLineGrid) -> HalfLineOperator:
    x = grid.nodes
    mat = grid.h * k(x[:, None], x[None, :])
    return HalfLineOperator(mat, grid, 0, 0, Kind.SINGULAR_GREEN)


def g_plus_minus(q: RationalSymbol, sign: int) -> GreenKernel:
    """Kernel ``k_q(sign (x + y))`` of ``g^+(q)`` (sign +1) or ``g^-(q)``."""
    if not q.is_zero and q.order > -1:
        raise BadOrder(f"normal order -1 required, got {q.order}")
    if q.is_zero:
        return GreenKernel()
    sgn = 1.0 if sign > 0 else -1.0
    return GreenKernel(func=lambda x, y: q.kernel(sgn * (x + y)))


def hankel_plus(symbol, grid: HalfLineGrid, inner: int) -> np.ndarray:
    """Grid version of ``g^+``: ``r+ op(symbol) e- J``, shape ``(N, inner)``."""
    t = toeplitz_coefficients(symbol, grid.h, grid.N + inner + 1)
    i = np.arange(grid.N)[:, None]
    l = np.arange(inner)[None, :]
    return t(i + l + 1)


def hankel_minus(symbol, grid: HalfLineGrid, inner: int) -> np.ndarray:
    """Grid version of ``g^-``: ``J r- op(symbol) e+``, shape ``(inner, N)``."""
    t = toeplitz_coefficients(symbol, grid.h, grid.N + inner + 1)
    l = np.arange(inner)[:, None]
    j = np.arange(grid.N)[None, :]
    return t(-(l + j + 1))


def _symbol_product(a, b):
    if isinstance(a, RationalSymbol) and isinstance(b, RationalSymbol):
        return a * b
    return SmoothSlice(lambda x: a(x) * b(x), a.at_infinity * b.at_infinity,
                       min(getattr(a, "margin", 1.0) if not isinstance(a, RationalSymbol) else _pm(a),
                           getattr(b, "margin", 1.0) if not isinstance(b, RationalSymbol) else _pm(b)))


def _pm(s: RationalSymbol) -> float:
    return min((abs(p.imag) for p in s.poles), default=1.0)


def direct_leftover(p1, p2, grid: HalfLineGrid, pad: int = 2) -> np.ndarray:
    """``(p1 p2)+ - p1+ p2+`` with the product evaluated on a padded grid,
    so the inner sum runs over the half-line rather than over ``[0, L]``."""
    big = grid.padded(pad)
    w12 = wiener_hopf(_symbol_product(p1, p2), big).matrix
    w1 = wiener_hopf(p1, big).matrix
    w2 = wiener_hopf(p2, big).matrix
    n = grid.N
    return (w12 - w1 @ w2)[:n, :n]


def structural_leftover(p1, p2, grid: HalfLineGrid, pad: int = 2) -> np.ndarray:
    """``g^+(q1) g^-(q2)``; for order-0 symbols the polynomial parts are the
    constants at infinity and drop out of both Hankel factors."""
    inner = pad * grid.N
    return hankel_plus(p1, grid, inner) @ hankel_minus(p2, grid, inner)


def reflect(s: RationalSymbol) -> RationalSymbol:
    """``xi -> s(-xi)``."""
    sign = (-1) ** (len(s.zeros) - len(s.poles))
    return RationalSymbol(s.scale * sign, tuple(-z for z in s.zeros), tuple(-p for p in s.poles))


def far_leftover(p1: RationalSymbol, p2: RationalSymbol, grid: HalfLineGrid, pad: int = 2) -> np.ndarray:
    """Leftover created by the far end of ``[0, L]``: the finite section
    satisfies ``T(p1 p2) - T(p1) T(p2) = near + J near(p1~, p2~) J`` with
    ``p~(xi) = p(-xi)`` and ``J`` the reversal."""
    return structural_leftover(reflect(p1), reflect(p2), grid, pad)[::-1, ::-1]


def leftover(p1, p2, grid: HalfLineGrid, tol: float = 1e-6) -> HalfLineOperator:
    """Leftover term ``(p1 p2)+ - p1+ p2+`` assembled from ``g^+ g^-``.

    Both symbols must have order <= 0, in which case the potential-trace
    terms of the split vanish.  The direct route is always evaluated and
    their difference is stored in ``meta['self_check']``.
    """
    for p in (p1, p2):
        if isinstance(p, RationalSymbol) and not p.is_zero and p.order > 0:
            raise SplitFailure("positive-order factors need the potential/trace split; "
                               "use leftover_apply")
    structural = structural_leftover(p1, p2, grid)
    direct = direct_leftover(p1, p2, grid)
    defect = float(np.linalg.norm(structural - direct, 2))
    if defect > tol:
        raise NumericalFailure(f"leftover routes disagree: {defect:.3e}", check="leftover")
    return HalfLineOperator(structural, grid, 0, 0, Kind.SINGULAR_GREEN,
                            {"self_check": defect})


# trace functionals ----------------------------------------------------------

def fd_weights(x0: float, xs: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for the ``m``-th derivative at ``x0``
    (Fornberg's recursion)."""
    n = len(xs)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def derivative_matrix(grid: HalfLineGrid, stencil: int = 11) -> np.ndarray:
    """Dense ``d/dx`` on the grid, centred stencils with one-sided ones at the ends."""
    n = grid.N
    x = grid.nodes
    D = np.zeros((n, n))
    half = stencil // 2
    for i in range(n):
        lo = min(max(i - half, 0), n - stencil)
        idx = np.arange(lo, lo + stencil)
        D[i, idx] = fd_weights(x[i], x[idx], 1)
    return D


def midpoint_weights(grid: HalfLineGrid, stencil: int = 9) -> np.ndarray:
    """Quadrature weights on ``[0, L]`` for midpoint nodes with
    Euler-Maclaurin end corrections through ``h^4``."""
    h = grid.h
    x = grid.nodes
    w = np.full(grid.N, h)
    idx = np.arange(stencil)
    d1_0 = fd_weights(0.0, x[idx], 1)
    d3_0 = fd_weights(0.0, x[idx], 3)
    idx_r = np.arange(grid.N - stencil, grid.N)
    d1_L = fd_weights(grid.L, x[idx_r], 1)
    d3_L = fd_weights(grid.L, x[idx_r], 3)
    w[idx] += -h ** 2 / 24 * d1_0 + 7 * h ** 4 / 5760 * d3_0
    w[idx_r] += h ** 2 / 24 * d1_L - 7 * h ** 4 / 5760 * d3_L
    return w


def trace_gamma(j: int, grid: HalfLineGrid) -> HalfLineOperator:
    """Row functional ``u -> (D_n^j u)(0+)`` with ``D_n = -i d/dx``.

    Uses ``u(0) = -int_0^inf (phi u)' dx`` with ``phi(x) = exp(-x)``.
    """
    if j < 0:
        raise ValueError("trace order must be non-negative")
    D = derivative_matrix(grid)
    w = midpoint_weights(grid) * np.exp(-grid.nodes)
    row = w @ (np.eye(grid.N) - D)
    Dn = -1j * D
    row = row.astype(complex)
    for _ in range(j):
        row = row @ Dn
    return HalfLineOperator(row[None, :], grid, j, j + 1, Kind.TRACE)


# boundary symbols and resolvents ----------------------------------------------

def _green_matrix(g, grid: HalfLineGrid) -> np.ndarray:
    if g is None:
        return np.zeros((grid.N, grid.N), dtype=complex)
    if isinstance(g, GreenKernel):
        return green_from_kernel(g, grid).matrix
    if isinstance(g, HalfLineOperator):
        return g.matrix
    return np.asarray(g, dtype=complex)


def boundary_symbol(p_slice, g, grid: HalfLineGrid) -> HalfLineOperator:
    """``c = p+(D_n) + g`` for one boundary point."""
    mat = wiener_hopf(p_slice, grid).matrix + _green_matrix(g, grid)
    return HalfLineOperator(mat, grid, 0, 0, Kind.COMPOSITE)


def resolvent_symbol(p):
    """``(1 + |p|^2)^{-1}`` as a symbol on the real line."""
    if isinstance(p, RationalSymbol):
        num, den = p.polys()
        dd = np.polymul(den, np.conj(den))
        nn = np.polymul(num, np.conj(num))
        return RationalSymbol.from_polys(dd, np.polyadd(dd, nn))
    return SmoothSlice(lambda x: 1.0 / (1.0 + np.abs(p(x)) ** 2),
                       1.0 / (1.0 + abs(p.at_infinity) ** 2), getattr(p, "margin", 1.0))


def resolvent(c: HalfLineOperator) -> np.ndarray:
    n = c.matrix.shape[1]
    gram = np.eye(n) + c.matrix.conj().T @ c.matrix
    try:
        return sla.solve(gram, np.eye(n), assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(str(exc)) from exc


def resolvent_decompose(c: HalfLineOperator, p_slice):
    """Split ``(1 + c* c)^{-1}`` into the truncated multiplier of
    ``(1 + |p|^2)^{-1}`` and a remainder of singular Green type."""
    full = resolvent(c)
    pseudo = wiener_hopf(resolvent_symbol(p_slice), c.grid)
    rem = HalfLineOperator(full - pseudo.matrix, c.grid, 0, 0, Kind.SINGULAR_GREEN)
    return pseudo, rem


def adjoint(a: HalfLineOperator) -> HalfLineOperator:
    """Discrete L^2 adjoint; defined in the calculus only for class 0."""
    if a.cls > 0:
        raise PositiveClass(f"adjoint of a class-{a.cls} operator leaves the calculus")
    return HalfLineOperator(a.matrix.conj().T, a.grid, a.order, 0, a.kind, dict(a.meta))


def green_lowrank_approx(g: HalfLineOperator, rank: int) -> HalfLineOperator:
    """Best rank-``rank`` approximation; spectral-norm error in ``meta``."""
    u, s, vh = np.linalg.svd(g.matrix)
    r = min(rank, s.size)
    approx = (u[:, :r] * s[:r]) @ vh[:r]
    err = float(s[r]) if r < s.size else 0.0
    return HalfLineOperator(approx, g.grid, g.order, g.cls, Kind.SINGULAR_GREEN,
                            {"approximation_error": err, "rank": r})


# serialization -------------------------------------------------------------

def save_operator(op: HalfLineOperator, path) -> None:
    """Write an ``.npz`` container: matrix plus a metadata header."""
    header = np.array([op.grid.N, op.grid.L, op.order, op.cls], dtype=float)
    np.savez(path, matrix=op.matrix, header=header, kind=np.array(op.kind.value))


def load_operator(path) -> HalfLineOperator:
    with np.load(path) as data:
        N, L, order, cls = data["header"]
        return HalfLineOperator(data["matrix"], HalfLineGrid(int(N), float(L)), int(order),
                                int(cls), Kind(str(data["kind"])))
