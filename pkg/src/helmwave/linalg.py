"""Complex sparse/dense kernels and a right-preconditioned GMRES driver.

Sparse matrices are ``scipy.sparse.csr_matrix`` with complex128 values; the
sparse LU is SuperLU (COLAMD ordering) via ``scipy.sparse.linalg.splu``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

Operator = Callable[[np.ndarray], np.ndarray]

_MODES = ("normal", "transpose", "adjoint")


class SingularMatrixError(ValueError):
    """Raised when a factorization hits an exact zero pivot."""


def as_csr(A) -> sp.csr_matrix:
    """Canonical complex CSR: sorted column indices, no explicit duplicates."""
    A = sp.csr_matrix(A, dtype=np.complex128)
    A.sum_duplicates()
    A.sort_indices()
    return A


def spmv(A: sp.spmatrix, x: np.ndarray, mode: str = "normal") -> np.ndarray:
    if mode not in _MODES:
        raise ValueError(f"unknown mode {mode!r}")
    nrows, ncols = A.shape
    expected = ncols if mode == "normal" else nrows
    if x.shape[0] != expected:
        raise ValueError(f"dimension mismatch: operand has {x.shape[0]} rows, expected {expected}")
    if mode == "normal":
        return A @ x
    if mode == "transpose":
        return A.T @ x
    return A.conj().T @ x


@dataclass(frozen=True)
class SparseFactorization:
    """LU factors of a square sparse matrix; P_r A P_c = L U."""

    lu: spla.SuperLU
    n: int

    @property
    def L(self):
        return self.lu.L

    @property
    def U(self):
        return self.lu.U

    @property
    def perm_r(self):
        return self.lu.perm_r

    @property
    def perm_c(self):
        return self.lu.perm_c


def lu_factorize(A: sp.spmatrix) -> SparseFactorization:
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got {A.shape}")
    try:
        lu = spla.splu(sp.csc_matrix(A, dtype=np.complex128))
    except RuntimeError as exc:  # SuperLU reports "Factor is exactly singular"
        raise SingularMatrixError(str(exc)) from exc
    return SparseFactorization(lu, A.shape[0])


def lu_solve(F: SparseFactorization, b: np.ndarray, mode: str = "normal") -> np.ndarray:
    """Solve ``A x = b`` (mode='normal') or ``A^H x = b`` (mode='adjoint').

    ``b`` may be a vector or a block of column vectors.
    """
    if b.shape[0] != F.n:
        raise ValueError(f"dimension mismatch: rhs has {b.shape[0]} rows, factor is {F.n}")
    if mode == "normal":
        trans = "N"
    elif mode == "adjoint":
        trans = "H"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return F.lu.solve(np.asarray(b, dtype=np.complex128), trans=trans)


def thin_qr(Y: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of range(Y), columns in the order of Y.

    Columns whose R diagonal falls below ``rtol * max|R_jj|`` are numerically
    dependent on the earlier ones and are dropped, so the returned width is
    the numerical rank.
    """
    if Y.ndim != 2 or Y.shape[0] < Y.shape[1]:
        raise ValueError(f"thin_qr needs a tall matrix, got shape {Y.shape}")
    if Y.shape[1] == 0:
        return np.zeros_like(Y, dtype=np.complex128)
    Q, R = np.linalg.qr(Y, mode="reduced")
    d = np.abs(np.diag(R))
    if d.max() == 0.0:
        return Q[:, :0]
    return Q[:, d > rtol * d.max()]


def small_svd(B: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``B = U diag(sigma) V^H`` with sigma descending; returns (U, sigma, V)."""
    U, s, Vh = np.linalg.svd(B, full_matrices=False)
    return U, s, Vh.conj().T


@dataclass
class GmresOptions:
    tolerance: float = 1e-5
    max_iterations: int = 500

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class GmresResult:
    x: np.ndarray
    iterations: int
    residual_history: list[float] = field(default_factory=list)
    converged: bool = False
    final_relres: float = np.inf


def _givens(a: complex, b: complex) -> tuple[float, complex]:
    # returns (c, s) with [c s; -conj(s) c] [a; b] = [r; 0], c real
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    t = np.hypot(abs(a), abs(b))
    c = abs(a) / t
    s = (a / abs(a)) * np.conj(b) / t
    return c, s


def gmres(
    apply_A: Operator,
    apply_M: Operator | None,
    b: np.ndarray,
    opts: GmresOptions | None = None,
) -> GmresResult:
    """Full (unrestarted) right-preconditioned GMRES from a zero initial guess.

    Solves ``A M y = b`` and returns ``x = M y``. Arnoldi uses modified
    Gram-Schmidt and the least-squares problem is updated with Givens
    rotations. Convergence is declared on the true relative residual
    ``||b - A x|| / ||b||``, which is checked whenever the recurrence estimate
    falls below the tolerance. ``iterations`` counts Arnoldi steps.
    """
    opts = opts or GmresOptions()
    if apply_M is None:
        apply_M = lambda v: v  # noqa: E731
    b = np.asarray(b, dtype=np.complex128)
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        raise ValueError("right-hand side must be nonzero")

    m = opts.max_iterations
    V = np.zeros((n, m + 1), dtype=np.complex128)
    H = np.zeros((m + 1, m), dtype=np.complex128)
    cs = np.zeros(m)
    sn = np.zeros(m, dtype=np.complex128)
    g = np.zeros(m + 1, dtype=np.complex128)
    V[:, 0] = b / bnorm
    g[0] = bnorm
    history = [1.0]

    def assemble(j: int) -> np.ndarray:
        y = sla.solve_triangular(H[:j, :j], g[:j])
        return apply_M(V[:, :j] @ y)

    x = np.zeros(n, dtype=np.complex128)
    relres = 1.0
    for j in range(m):
        w = apply_A(apply_M(V[:, j]))
        wnorm = np.linalg.norm(w)
        for i in range(j + 1):
            H[i, j] = np.vdot(V[:, i], w)
            w = w - H[i, j] * V[:, i]
        H[j + 1, j] = np.linalg.norm(w)
        breakdown = H[j + 1, j] <= 1e-14 * wnorm
        if not breakdown:
            V[:, j + 1] = w / H[j + 1, j]

        for i in range(j):
            hi, hi1 = H[i, j], H[i + 1, j]
            H[i, j] = cs[i] * hi + sn[i] * hi1
            H[i + 1, j] = -np.conj(sn[i]) * hi + cs[i] * hi1
        cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
        H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
        H[j + 1, j] = 0.0
        g[j + 1] = -np.conj(sn[j]) * g[j]
        g[j] = cs[j] * g[j]

        estimate = min(abs(g[j + 1]) / bnorm, history[-1])
        history.append(estimate)
        if estimate < opts.tolerance or breakdown or j == m - 1:
            x = assemble(j + 1)
            relres = np.linalg.norm(b - apply_A(x)) / bnorm
            if relres < opts.tolerance:
                return GmresResult(x, j + 1, history, True, relres)
            if breakdown:
                break
    return GmresResult(x, len(history) - 1, history, False, relres)
