"""Graph projections and finite-dimensional index computations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import GapViolation


def opnorm(a: np.ndarray) -> float:
    """Spectral norm via Lanczos on ``a``; dense SVD for small matrices."""
    if not np.any(a):
        return 0.0  # ARPACK cannot start from the zero matrix
    if min(a.shape) <= 256:
        return float(np.linalg.norm(a, 2))
    from scipy.sparse.linalg import svds
    return float(svds(a, k=1, return_singular_vectors=False, tol=1e-10, random_state=0)[0])


def _graph_basis(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the graph, the range of ``[1; a]``.

    QR avoids forming ``1 + a* a``, whose condition number is the square
    of that of ``[1; a]``.
    """
    n = a.shape[1]
    q, _ = np.linalg.qr(np.vstack([np.eye(n, dtype=complex), a]))
    return q


def _inv_plus_gram(a: np.ndarray, stable: bool = False) -> np.ndarray:
    """``(1 + a* a)^{-1}``.

    The default Cholesky solve has error ``~ eps ||a||^2``, harmless for
    index counts.  ``stable=True`` returns ``q1 q1*`` with ``q1`` the top
    block of the graph basis, accurate to ``eps`` at twice the cost.
    """
    n = a.shape[1]
    if stable:
        q1 = _graph_basis(np.asarray(a, dtype=complex))[:n]
        return q1 @ q1.conj().T
    gram = np.eye(n) + a.conj().T @ a
    return sla.solve(gram, np.eye(n), assume_a="pos")


@dataclass
class GraphProjection:
    """Orthogonal projection onto the graph of ``a: C^n -> C^m``.

    ``matrix`` acts on ``C^n (+) C^m``.
    """

    matrix: np.ndarray
    n: int
    m: int
    source: object = None

    @property
    def blocks(self):
        M, n = self.matrix, self.n
        return ((M[:n, :n], M[:n, n:]), (M[n:, :n], M[n:, n:]))

    def idempotent_defect(self) -> float:
        M = self.matrix
        return opnorm(M @ M - M)

    def idempotent_estimate(self, probes: int = 8, seed: int = 0) -> float:
        """Randomized Frobenius estimate of ``M^2 - M`` from ``probes``
        Gaussian columns; bounds the spectral norm from above up to
        sampling error, at the cost of two thin products."""
        M = self.matrix
        omega = np.random.default_rng(seed).normal(size=(M.shape[1], probes))
        y = M @ omega
        return float(np.linalg.norm(M @ y - y) / np.sqrt(probes))

    def selfadjoint_defect(self) -> float:
        M = self.matrix
        return opnorm(M - M.conj().T)

    def block_identity_defect(self, a: np.ndarray) -> float:
        """Lower-right block against ``1 - (1 + a a*)^{-1}``."""
        lr = self.blocks[1][1]
        rhs = np.eye(self.m) - _inv_plus_gram(a.conj().T, stable=True)
        return opnorm(lr - rhs)

    def norm(self) -> float:
        return opnorm(self.matrix)


def graph_projection(a, source=None, stable: bool = True) -> GraphProjection:
    """Graph projection

        [[(1+a*a)^-1,      (1+a*a)^-1 a*  ],
         [a (1+a*a)^-1,    a (1+a*a)^-1 a*]].

    ``stable=True`` forms ``q q*`` from an orthonormal basis of the graph,
    accurate to ``eps`` for any ``a``.  ``stable=False`` uses the block
    formula, about twice as fast, with error ``~ eps ||a||^2``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    m, n = a.shape
    if stable:
        q = _graph_basis(a)
        M = q @ q.conj().T
    else:
        r = _inv_plus_gram(a)
        ur = r @ a.conj().T
        M = np.block([[r, ur], [a @ r, a @ ur]])
    # symmetrize away rounding so the projection is Hermitian to the last bit
    M = 0.5 * (M + M.conj().T)
    return GraphProjection(M, n, m, source)


def reference_projection(n: int, m: int) -> np.ndarray:
    """``e = diag(0, 1)`` on ``C^n (+) C^m``."""
    return np.diag(np.r_[np.zeros(n), np.ones(m)]).astype(complex)


def graph_limit_defect(a, t: float, full: bool = False) -> float:
    """Distance of ``Gr(t a)`` from ``diag(pi_ker a, 1 - pi_ker a*)``.

    By default only the diagonal blocks are compared; they converge like
    ``t^-2``.  The off-diagonal blocks ``(1 + t^2 a*a)^{-1} t a*`` decay only
    like ``1 / (t sigma_min)``; ``full=True`` includes them.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    m, n = a.shape
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    tol = max(m, n) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    v_ker = vh[rank:].conj().T
    u_coker = u[:, rank:]
    limit = np.zeros((n + m, n + m), dtype=complex)
    limit[:n, :n] = v_ker @ v_ker.conj().T
    limit[n:, n:] = np.eye(m) - u_coker @ u_coker.conj().T
    diff = graph_projection(t * a).matrix - limit
    if not full:
        diff[:n, n:] = 0
        diff[n:, :n] = 0
    return float(np.linalg.norm(diff, 2))


def trace_index(a, weight=None, scale: float = 1.0, weight_out=None) -> float:
    """``Tr w (1 + s^2 a*a)^{-1} - Tr w' (1 + s^2 a a*)^{-1}``.

    With no weight and ``scale = 1`` this is the plain trace formula, equal
    to ``dim ker a - dim ker a*``.  A diagonal weight restricts the count
    to part of the grid; the paired nonzero singular values then no longer
    cancel exactly and their residue is ``O(scale^-2)``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex)) * scale
    r1 = _inv_plus_gram(a)
    r2 = _inv_plus_gram(a.conj().T)
    if weight is None:
        return float(np.trace(r1).real - np.trace(r2).real)
    w_out = weight if weight_out is None else weight_out
    return float(np.real(np.diag(r1) @ weight) - np.real(np.diag(r2) @ w_out))


def _check_gap(s: np.ndarray, tol: float):
    bad = s[(s >= tol) & (s <= 10 * tol)]
    if bad.size:
        raise GapViolation(f"singular values {bad[:4]} inside [{tol:.2e}, {10 * tol:.2e}]")


def svd_index(a, tol: float | None = None, region=None, region_out=None) -> int:
    """``#{sigma(a) < tol} - #{sigma(a*) < tol}`` counting shape zeros.

    ``region`` (a 0/1 or weight vector on the domain, ``region_out`` on the
    codomain) keeps only the singular vectors carrying more than half of
    their mass there.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    m, n = a.shape
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if tol is None:
        tol = 1e-4 * smax
    if smax == 0:
        # zero map: everything is kernel or cokernel
        tol = 1.0
    _check_gap(s, tol)
    small = np.r_[s < tol, np.ones(max(n - s.size, 0), bool)]
    small_out = np.r_[s < tol, np.ones(max(m - s.size, 0), bool)]
    if region is None:
        return int(small.sum()) - int(small_out.sum())
    r_out = region if region_out is None else region_out
    v = vh.conj().T
    mass_in = (np.abs(v) ** 2 * np.asarray(region)[:, None]).sum(axis=0)
    mass_out = (np.abs(u) ** 2 * np.asarray(r_out)[:, None]).sum(axis=0)
    return int(np.sum(small & (mass_in > 0.5))) - int(np.sum(small_out & (mass_out > 0.5)))


def direct_sum(a, b) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    return sla.block_diag(a, b)


HALFLINE_SCALE = 1e4


def halfline_trace_index(a, grid, scale: float = HALFLINE_SCALE) -> float:
    """Trace-formula index attached to the boundary at ``x = 0``."""
    return trace_index(a, grid.boundary_weight(), scale)


def halfline_svd_index(a, grid, tol: float | None = None) -> int:
    return svd_index(a, tol, region=grid.boundary_weight())
