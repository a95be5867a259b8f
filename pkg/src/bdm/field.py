"""Grid model of the continuous field over the tangent semigroupoid.

The ``hbar = 0`` fibre is represented by convolution operators on a
periodic fibre grid (``pi0``) and their truncations to the half-space
(``pi0_boundary``).  The ``hbar > 0`` fibres are cylinder operators: for an
``x'``-independent symbol on ``S^1 x R_+`` the operator splits into blocks
indexed by the tangential frequency ``n``, each a half-line operator.

Fibre samples use the centred grid ``v_m = (m - N/2) dv`` and the transform
``f^(xi_k) = dv sum_m f(v_m) exp(-i xi_k v_m)`` on the DFT frequencies.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import halfline as hl
from .errors import EllipticityFailure
from .graph import graph_projection, opnorm
from .grid import HalfLineGrid
from .symbols import RationalSymbol, SymbolFamily, scale_semiclassical


@dataclass
class FiberFunction:
    """Samples of ``f(v)`` or ``f(v', v_n)`` (tangential axis first)."""

    values: np.ndarray
    dv: float
    dv_tan: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim == 1:
            self.values = self.values[None, :]
        if self.values.shape[1] % 2:
            raise ValueError("normal fibre size must be even")

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def from_callable(cls, func, n: int, dv: float, n_tan: int = 1, dv_tan: float = 1.0):
        v = (np.arange(n) - n // 2) * dv
        if n_tan == 1:
            return cls(func(v), dv)
        vt = (np.arange(n_tan) - n_tan // 2) * dv_tan
        return cls(func(vt[:, None], v[None, :]), dv, dv_tan)

    def centred_at_zero(self) -> np.ndarray:
        """Samples with ``v = 0`` moved to index 0 along every axis."""
        return np.fft.ifftshift(self.values, axes=(0, 1))

    def transform(self) -> np.ndarray:
        """``f^`` on the DFT frequencies, FFT order."""
        return self.dv * self.dv_tan * np.fft.fft2(self.centred_at_zero())

    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum() * self.dv * self.dv_tan)


def _conv_matrix(c: np.ndarray, weight: float, rows_n: np.ndarray, cols_n: np.ndarray):
    """Matrix with entries ``weight * c[(a - b) % Nt, (j - l) % N]`` over
    tangential indices ``a, b`` and normal indices ``j, l``."""
    nt, n = c.shape
    a = np.arange(nt)
    da = np.mod(a[:, None] - a[None, :], nt)
    dj = np.mod(rows_n[:, None] - cols_n[None, :], n)
    big = c[da[:, None, :, None], dj[None, :, None, :]]
    return weight * big.reshape(nt * rows_n.size, nt * cols_n.size)


def pi0(f: FiberFunction) -> np.ndarray:
    """Periodic fibrewise convolution ``xi -> int f(v - w) xi(w) dw``."""
    idx = np.arange(f.shape[1])
    return _conv_matrix(f.centred_at_zero(), f.dv * f.dv_tan, idx, idx)


def pi0_boundary(f: FiberFunction) -> np.ndarray:
    """Convolution truncated to ``v_n >= 0`` (normal nodes ``0 .. N/2 - 1``)."""
    idx = np.arange(f.shape[1] // 2)
    return _conv_matrix(f.centred_at_zero(), f.dv * f.dv_tan, idx, idx)


def pi0_tilde_boundary(kernel, xip: np.ndarray, grid: HalfLineGrid) -> list:
    """Operators of a boundary kernel after tangential Fourier transform:
    one singular Green matrix per tangential frequency."""
    return [hl.green_from_kernel(kernel(x), grid).matrix for x in xip]


def _tangential_conjugate(mat: np.ndarray, nt: int) -> np.ndarray:
    """``F' mat F'^{-1}`` with ``F'`` the DFT along the tangential index."""
    m = mat.shape[0] // nt
    t = mat.reshape(nt, m, nt, m)
    t = np.fft.fft(t, axis=0)
    t = np.fft.ifft(t, axis=2)
    return t.reshape(nt * m, nt * m)


@dataclass
class FourierDefects:
    interior: float
    boundary: float


def fourier_identify(f: FiberFunction) -> FourierDefects:
    """Conjugation defects of the fibre representations.

    Interior: ``F pi0(f) F^{-1}`` against multiplication by ``f^``.
    Boundary: ``F' pi0_boundary(f) F'^{-1}`` against the block-diagonal
    operator whose blocks are Toeplitz sections generated by the slices
    ``xi_n -> f^(xi'_k, xi_n)``.
    """
    nt, n = f.shape
    fhat = f.transform()
    a = pi0(f).reshape(nt, n, nt, n)
    a = np.fft.ifftn(np.fft.fftn(a, axes=(0, 1)), axes=(2, 3)).reshape(nt * n, nt * n)
    interior = float(np.linalg.norm(a - np.diag(fhat.ravel()), 2))

    half = n // 2
    b = _tangential_conjugate(pi0_boundary(f), nt)
    ref = np.zeros_like(b)
    for k in range(nt):
        sl = slice(k * half, (k + 1) * half)
        ref[sl, sl] = hl.sampled_wiener_hopf(fhat[k], half)
    boundary = float(np.linalg.norm(b - ref, 2))
    return FourierDefects(interior, boundary)


# cylinder operators -----------------------------------------------------------

@dataclass
class CylinderOperator:
    """Block-diagonal operator on ``S^1 x R_+``, one block per tangential
    frequency ``n``."""

    blocks: dict
    grid: HalfLineGrid
    hbar: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def frequencies(self):
        return sorted(self.blocks)


TAIL_MARGIN = 0.1


def _slice_min_modulus(symbol, samples: int = 2001) -> float:
    xi = np.tan(np.linspace(-np.pi / 2, np.pi / 2, samples)[1:-1])
    vals = np.abs(symbol(xi))
    return float(min(vals.min(), abs(symbol.at_infinity)))


def block(fam: SymbolFamily, green, hbar: float, n: float, grid: HalfLineGrid) -> np.ndarray:
    """``c_hbar(n)``: the truncated multiplier of ``xi_n -> p(hbar n, hbar xi_n)``
    plus the Green kernel of ``g(hbar n)`` rescaled by ``hbar``."""
    fam_h = scale_semiclassical(fam, hbar) if hbar != 1.0 else fam
    try:
        p = fam_h.eval(0.0, float(n))
    except ValueError as exc:
        raise EllipticityFailure(str(exc), frequency=n) from exc
    g = None
    if green is not None:
        g = green(hbar * n)
        g = g.scaled(hbar) if hbar != 1.0 else g
    return hl.boundary_symbol(p, g, grid).matrix


def assemble_family(fam: SymbolFamily, green, hbar: float = 1.0, n_max: int = 8,
                    grid: HalfLineGrid | None = None, tail: int = 64) -> CylinderOperator:
    """Blocks ``c_hbar(n)`` for ``|n| <= n_max``.

    Frequencies ``n_max < |n| <= tail`` are not assembled; their symbol
    slices must stay away from zero by ``TAIL_MARGIN``, otherwise
    ``EllipticityFailure`` is raised with the offending frequency.
    """
    grid = grid or HalfLineGrid()
    fam_h = scale_semiclassical(fam, hbar) if hbar != 1.0 else fam
    worst = np.inf
    for n in range(n_max + 1, tail + 1):
        for s in (n, -n):
            try:
                m = _slice_min_modulus(fam_h.eval(0.0, float(s)))
            except ValueError as exc:
                raise EllipticityFailure(str(exc), frequency=s) from exc
            if m < TAIL_MARGIN:
                raise EllipticityFailure(f"symbol modulus {m:.3g} at tangential frequency {s}",
                                         frequency=s)
            worst = min(worst, m)
    blocks = {n: block(fam, green, hbar, n, grid) for n in range(-n_max, n_max + 1)}
    return CylinderOperator(blocks, grid, hbar, {"tail_min_modulus": worst})


def scaling_defect(fam: SymbolFamily, green, hbar: float, n: int, grid: HalfLineGrid) -> float:
    """``|| c_hbar(n) - kappa^{-1} c_1(hbar n) kappa ||``.

    On grids the dilation is the relabelling of ``G(N, L)`` as
    ``G(N, L / hbar)``, so the right-hand side is the ``hbar = 1`` block at
    frequency ``hbar n`` assembled on the rescaled grid.
    """
    lhs = block(fam, green, hbar, n, grid)
    rhs = block(fam, green, 1.0, hbar * n, grid.scaled(1.0 / hbar))
    return float(np.max(np.abs(lhs - rhs)))


@dataclass
class DecayFit:
    hbars: np.ndarray
    norms: np.ndarray
    exponent: float


def fit_exponent(hbars, values) -> float:
    hbars, values = np.asarray(hbars, float), np.asarray(values, float)
    return float(np.polyfit(np.log(hbars), np.log(values), 1)[0])


def localization_decay(kernel, hbars, grid: HalfLineGrid, start: float = 1.0,
                       power: int = 0) -> DecayFit:
    """Norms of ``phi g_hbar / hbar^power`` where ``phi`` is the indicator
    of ``x_n >= start`` and ``g_hbar`` the rescaled Green kernel; the
    fitted exponent is the log-log slope against ``hbar``."""
    phi = (grid.nodes >= start).astype(float)
    norms = []
    for h in hbars:
        g = hl.green_from_kernel(kernel.scaled(h), grid).matrix
        norms.append(np.linalg.norm(phi[:, None] * g, 2) / h ** power)
    norms = np.maximum(np.array(norms), np.finfo(float).tiny)
    return DecayFit(np.asarray(hbars, float), norms, fit_exponent(hbars, norms))


# semiclassical model with interior x_n dependence -----------------------------

def _resolvent(a: np.ndarray) -> np.ndarray:
    n = a.shape[1]
    return np.linalg.solve(np.eye(n) + a.conj().T @ a, np.eye(n))


@dataclass
class SemiclassicalModel:
    """Cylinder model ``p(x_n, xi', xi_n) = m(xi', xi_n) + psi(x_n) q(xi', xi_n)``.

    ``m`` is unimodular and ``x_n``-independent, ``psi`` is a bump supported
    in ``[lo, hi]``, away from both ends of the grid.  Operators are left
    quantized; the truncated parts of ``x_n``-independent symbols coincide
    with ``wiener_hopf``.
    """

    principal: callable
    perturbation: callable
    green: callable
    cutoff: callable
    grid: HalfLineGrid = field(default_factory=lambda: HalfLineGrid(1536, 10.0))
    oversample: int = 4

    def _parts(self, hbar: float, n: int):
        xip = hbar * n
        m = self.principal(xip).scaled(hbar)
        q = self.perturbation(xip).scaled(hbar)
        g = self.green(xip).scaled(hbar)
        return m, q, g

    @property
    def _rows(self):
        return np.nonzero(self.cutoff(self.grid.nodes) != 0)[0]

    def _left(self, func, limit, base: np.ndarray) -> np.ndarray:
        """Left quantization of ``func(x, xi)``: rows outside the support of
        ``psi`` are taken from ``base`` (the operator with ``psi = 0``)."""
        rows = self._rows
        out = np.array(base, dtype=complex)
        M = self.oversample * self.grid.N
        op = hl.left_quantize(func, self.grid, limit=limit, M=M, rows=rows).matrix
        out[rows] = op[rows]
        return out

    def operator(self, hbar: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``(A_hbar(n), c0_hbar(n))`` with ``c0`` the ``psi = 0`` block."""
        m, q, g = self._parts(hbar, n)
        wm = hl.wiener_hopf(m, self.grid).matrix
        gm = hl.green_from_kernel(g, self.grid).matrix
        psi = self.cutoff(self.grid.nodes)
        a = wm + psi[:, None] * hl.wiener_hopf(q, self.grid).matrix + gm
        return a, wm + gm

    def approximate_inverse(self, hbar: float, n: int) -> tuple[np.ndarray, float]:
        """``B(hbar)`` and ``||(1 + A*A)^{-1} - B(hbar)||`` for one block.

        ``B = Op((1 + |p_hbar|^2)^{-1}) + [(1 + c0* c0)^{-1} - W((1 + |m_hbar|^2)^{-1})]``;
        the bracket is the boundary correction of the ``psi = 0`` model.
        """
        m, q, _ = self._parts(hbar, n)
        a, c0 = self.operator(hbar, n)
        half = 0.5 * np.eye(self.grid.N)  # (1 + |m|^2)^{-1} = 1/2
        inner = self._left(
            lambda x, xi: 1.0 / (1.0 + np.abs(m(xi) + self.cutoff(x) * q(xi)) ** 2),
            lambda x: 1.0 / (1.0 + np.abs(m.at_infinity + self.cutoff(x) * q.at_infinity) ** 2),
            half)
        B = inner + (_resolvent(c0) - half)
        return B, opnorm(_resolvent(a) - B)

    def _symbol_samples(self, m, q):
        """``p(x_i, xi(theta_k))`` on the rows where ``psi != 0``."""
        rows = self._rows
        M = self.oversample * self.grid.N
        xi = hl.cayley_frequencies(self.grid.h, M)
        finite = np.isfinite(xi)
        psi = self.cutoff(self.grid.nodes[rows])[:, None]
        p = np.empty((rows.size, M), dtype=complex)
        p[:, finite] = m(xi[finite])[None, :] + psi * q(xi[finite])[None, :]
        p[:, ~finite] = m.at_infinity + psi * q.at_infinity
        return rows, p

    def section_defect(self, hbar: float, n: int) -> float:
        return self.section(hbar, n)[0]

    def section(self, hbar: float, n: int) -> tuple[float, float]:
        """``(defect, idempotency)``, the second a randomized estimate of
        ``||Gr^2 - Gr||``.

        The defect is the distance from ``Gr(A_hbar(n))`` to the value
        predicted by the ``hbar = 0`` data: the left-quantized symbol
        projection ``Gr(p)`` corrected at the boundary by
        ``Gr(c0) - W(Gr(m))`` entrywise.
        """
        m, q, _ = self._parts(hbar, n)
        a, c0 = self.operator(hbar, n)
        N = self.grid.N
        wm = hl.wiener_hopf(m, self.grid).matrix
        wmbar = hl.wiener_hopf(m.adjoint(), self.grid).matrix
        base = [[0.5 * np.eye(N), 0.5 * wmbar], [0.5 * wm, 0.5 * np.eye(N)]]
        rows, p = self._symbol_samples(m, q)
        r = 1.0 / (1.0 + np.abs(p) ** 2)
        entries = [[r, np.conj(p) * r], [p * r, np.abs(p) ** 2 * r]]
        sym = np.empty((2 * N, 2 * N), dtype=complex)
        for i in range(2):
            for j in range(2):
                blk = np.array(base[i][j], dtype=complex)
                blk[rows] = hl.quantize_samples(entries[i][j], self.grid, rows)[rows]
                sym[i * N:(i + 1) * N, j * N:(j + 1) * N] = blk
        correction = graph_projection(c0, stable=False).matrix - np.block(base)
        exact = graph_projection(a, stable=False)
        return opnorm(exact.matrix - (sym + correction)), exact.idempotent_estimate()

    def leftover_defect(self, hbar: float, n: int, other: RationalSymbol) -> float:
        """``|| op+(p1) op+(p2) - op+(p1 p2) - l(p1, p2) ||`` with ``p1`` the
        ``x_n``-independent ``other`` (rescaled) and ``p2`` the model symbol."""
        m, q, _ = self._parts(hbar, n)
        p1 = other.scaled(hbar)
        psi = self.cutoff(self.grid.nodes)
        w1 = hl.wiener_hopf(p1, self.grid).matrix
        p2 = hl.wiener_hopf(m, self.grid).matrix + psi[:, None] * hl.wiener_hopf(q, self.grid).matrix
        prod_m = hl.wiener_hopf(p1 * m, self.grid).matrix
        prod = prod_m + psi[:, None] * hl.wiener_hopf(p1 * q, self.grid).matrix
        near = hl.structural_leftover(p1, m, self.grid)
        far = hl.far_leftover(p1, m, self.grid)
        return opnorm(w1 @ p2 - prod + near + far)


# reports -------------------------------------------------------------------------

DYADIC_SCHEDULE = tuple(2.0 ** -k for k in range(0, 7))
MATCHED_COVECTORS = (0.0, 1.0)


def _frequency(xip: float, hbar: float) -> int:
    n = xip / hbar
    if abs(n - round(n)) > 1e-12:
        raise ValueError(f"covector {xip} is not a frequency multiple of hbar={hbar}")
    return int(round(n))


def approximate_inverse(model: SemiclassicalModel, hbar: float,
                        covectors=MATCHED_COVECTORS) -> CylinderOperator:
    """Blocks of ``B(hbar)`` at tangential frequencies ``n = xi' / hbar``;
    ``meta['defect']`` is the largest ``||(1 + A*A)^{-1} - B||``."""
    blocks, defects = {}, {}
    for xip in covectors:
        n = _frequency(xip, hbar)
        blocks[n], defects[n] = model.approximate_inverse(hbar, n)
    return CylinderOperator(blocks, model.grid, hbar,
                            {"defects": defects, "defect": max(defects.values())})


@dataclass
class SectionReport:
    """Defects of the section against the ``hbar = 0`` data, per ``hbar``.

    Metric: spectral norm of ``Gr(A_hbar(n))`` minus the left-quantized
    ``Gr(p_hbar)`` plus the boundary correction ``Gr(c0) - W(Gr(m))``,
    maximized over the matched frequencies ``n = xi' / hbar``.
    """

    hbars: list
    max_defect: list
    per_frequency: list
    idempotency: list

    def as_table(self) -> list:
        return [{"hbar": h, "max_defect": d, "per_frequency": {str(k): v for k, v in pf.items()},
                 "idempotency": e}
                for h, d, pf, e in zip(self.hbars, self.max_defect, self.per_frequency,
                                       self.idempotency)]


def section_continuity(model: SemiclassicalModel, schedule=DYADIC_SCHEDULE[1:],
                       covectors=MATCHED_COVECTORS) -> SectionReport:
    hbars, worst, per, idem = [], [], [], []
    for h in schedule:
        defects, e = {}, 0.0
        for xip in covectors:
            n = _frequency(xip, h)
            defects[n], d_idem = model.section(h, n)
            e = max(e, d_idem)
        hbars.append(h)
        worst.append(max(defects.values()))
        per.append(defects)
        idem.append(e)
    return SectionReport(hbars, worst, per, idem)


def inverse_defects(model: SemiclassicalModel, schedule=DYADIC_SCHEDULE[1:],
                    covectors=MATCHED_COVECTORS) -> DecayFit:
    d = [approximate_inverse(model, h, covectors).meta["defect"] for h in schedule]
    return DecayFit(np.asarray(schedule, float), np.asarray(d), fit_exponent(schedule, d))


def leftover_defects(model: SemiclassicalModel, other: RationalSymbol,
                     schedule=DYADIC_SCHEDULE[1:], covectors=MATCHED_COVECTORS) -> DecayFit:
    d = [max(model.leftover_defect(h, _frequency(x, h), other) for x in covectors)
         for h in schedule]
    return DecayFit(np.asarray(schedule, float), np.asarray(d), fit_exponent(schedule, d))


def singular_value_ratio(mat: np.ndarray, k: int = 20, atol: float = 1e-12) -> float:
    """``sigma_k / sigma_1`` (1-based); 0 when the rank is below ``k`` or the
    matrix is zero up to rounding (``sigma_1 < atol``)."""
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size < k or s[0] < atol:
        return 0.0
    return float(s[k - 1] / s[0])


def graph_remainder(c: np.ndarray, p, grid: HalfLineGrid) -> np.ndarray:
    """``Gr(c) - W(Gr(p))`` with the truncation applied entrywise."""
    r = hl.resolvent_symbol(p)
    if isinstance(p, RationalSymbol):
        entries = [[r, p.adjoint() * r], [p * r, p * p.adjoint() * r]]
    else:
        pa = lambda x: np.conj(p(x))  # noqa: E731
        entries = [[r, hl._symbol_product(hl.SmoothSlice(pa, np.conj(p.at_infinity), p.margin), r)],
                   [hl._symbol_product(p, r),
                    hl.SmoothSlice(lambda x: np.abs(p(x)) ** 2 / (1 + np.abs(p(x)) ** 2),
                                   abs(p.at_infinity) ** 2 / (1 + abs(p.at_infinity) ** 2),
                                   p.margin)]]
    sym = np.block([[hl.wiener_hopf(e, grid).matrix for e in row] for row in entries])
    return graph_projection(c).matrix - sym
