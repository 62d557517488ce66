"""Restricted additive Schwarz sweeps with Galerkin coarse correction.

A :class:`SchwarzContext` lives on one parent subdomain (the root for the
global problem) and combines its children's local solves. Every operator here
accepts a vector or a block of column vectors.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .decomposition import HierarchyNode
from .linalg import SparseFactorization, lu_factorize, lu_solve


class LocalSolveProvider(Protocol):
    """Approximate local inverse: forward ≈ Ã⁻¹·, adjoint is its exact Hermitian transpose."""

    def forward(self, b: np.ndarray) -> np.ndarray: ...

    def adjoint(self, b: np.ndarray) -> np.ndarray: ...


@dataclass
class ExactSolve:
    factor: SparseFactorization

    @classmethod
    def of(cls, matrix: sp.spmatrix) -> "ExactSolve":
        return cls(lu_factorize(matrix))

    def forward(self, b):
        return lu_solve(self.factor, b, "normal")

    def adjoint(self, b):
        return lu_solve(self.factor, b, "adjoint")


class SingularCoarseError(ValueError):
    pass


@dataclass
class CoarseSpace:
    """Coarse basis ``C`` on a parent's node set with its Galerkin matrix ``C^H A C``."""

    parent_id: int
    C: np.ndarray
    blocks: list[tuple[int, int]]  # (child id, number of columns)
    Ac: np.ndarray
    lu: tuple | None = None
    sigmas: dict[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_basis(cls, parent_id, C, A, blocks, sigmas=None) -> "CoarseSpace":
        Ac = C.conj().T @ (A @ C)
        lu = None
        if Ac.shape[0]:
            with warnings.catch_warnings():
                # singularity is reported below with context
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu = sla.lu_factor(Ac, check_finite=True)
            piv = np.abs(np.diag(lu[0]))
            if piv.min() <= 1e-14 * piv.max():
                raise SingularCoarseError(
                    f"coarse matrix of subdomain {parent_id} is singular "
                    f"(pivot ratio {piv.min() / piv.max():.2e}); the coarse modes are redundant"
                )
        return cls(parent_id, C, list(blocks), Ac, lu, dict(sigmas or {}))

    @property
    def dim(self) -> int:
        return self.C.shape[1]

    def correction(self, r: np.ndarray) -> np.ndarray:
        """C A_c⁻¹ Cᴴ r."""
        if self.dim == 0:
            return np.zeros_like(r, dtype=np.complex128)
        return self.C @ sla.lu_solve(self.lu, self.C.conj().T @ r)

    def correction_adjoint(self, r: np.ndarray) -> np.ndarray:
        """C A_c⁻ᴴ Cᴴ r."""
        if self.dim == 0:
            return np.zeros_like(r, dtype=np.complex128)
        return self.C @ sla.lu_solve(self.lu, self.C.conj().T @ r, trans=2)


@dataclass
class SchwarzContext:
    matrix: sp.csr_matrix
    children: Sequence[HierarchyNode]
    providers: Sequence[LocalSolveProvider]
    coarse: CoarseSpace | None = None
    n_i: int = 1

    def __post_init__(self):
        if self.n_i < 1:
            raise ValueError("n_i must be >= 1")
        if len(self.children) != len(self.providers):
            raise ValueError("one provider per child required")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _mask(child: HierarchyNode, u: np.ndarray) -> np.ndarray:
    return child.owned_mask.reshape(child.owned_mask.shape + (1,) * (u.ndim - 1))


def ras_apply(ctx: SchwarzContext, r: np.ndarray) -> np.ndarray:
    """Σ_i P_i S_i R_i r, summed in ascending child id."""
    out = np.zeros(r.shape, dtype=np.complex128)
    for child, solve in zip(ctx.children, ctx.providers):
        local = solve.forward(r[child.parent_index])
        out[child.parent_index] += np.where(_mask(child, local), local, 0)
    return out


def ras_adjoint(ctx: SchwarzContext, y: np.ndarray) -> np.ndarray:
    out = np.zeros(y.shape, dtype=np.complex128)
    for child, solve in zip(ctx.children, ctx.providers):
        z = y[child.parent_index]
        z = np.where(_mask(child, z), z, 0)
        out[child.parent_index] += solve.adjoint(z)
    return out


def schwarz_step(ctx: SchwarzContext, u: np.ndarray, f: np.ndarray) -> np.ndarray:
    """One sweep ũ = u + Σ P_i S_i R_i (f - A u), then the coarse correction."""
    A = ctx.matrix
    u_tilde = u + ras_apply(ctx, f - A @ u)
    if ctx.coarse is None or ctx.coarse.dim == 0:
        return u_tilde
    return u_tilde + ctx.coarse.correction(f - A @ u_tilde)


def precond_apply(ctx: SchwarzContext, r: np.ndarray) -> np.ndarray:
    """n_i Schwarz steps on A e = r from e = 0 (a fixed linear map of r)."""
    A = ctx.matrix
    e = ras_apply(ctx, r)
    if ctx.coarse is not None and ctx.coarse.dim:
        e = e + ctx.coarse.correction(r - A @ e)
    for _ in range(ctx.n_i - 1):
        e = schwarz_step(ctx, e, r)
    return e


def precond_adjoint(ctx: SchwarzContext, y: np.ndarray) -> np.ndarray:
    """Exact Hermitian transpose of :func:`precond_apply`.

    One step is e ↦ G e + N r with G = (I - K A)(I - Q A) and
    N = (I - K A) Q + K (Q the RAS sum, K the coarse correction). The
    n_i-step map is Σ_k G^k N, so its adjoint is Σ_k Nᴴ (Gᴴ)^k.
    """
    A = ctx.matrix
    AH = A.conj().T
    has_coarse = ctx.coarse is not None and ctx.coarse.dim > 0

    def i_minus_AH_KH(z):
        if not has_coarse:
            return z
        return z - AH @ ctx.coarse.correction_adjoint(z)

    def N_H(z):
        out = ras_adjoint(ctx, i_minus_AH_KH(z))
        if has_coarse:
            out = out + ctx.coarse.correction_adjoint(z)
        return out

    def G_H(z):
        w = i_minus_AH_KH(z)
        return w - AH @ ras_adjoint(ctx, w)

    z = y
    acc = N_H(z)
    for _ in range(ctx.n_i - 1):
        z = G_H(z)
        acc = acc + N_H(z)
    return acc


@dataclass
class IterativeSolve:
    """Approximate inverse of a non-leaf subdomain matrix by its own Schwarz iteration."""

    ctx: SchwarzContext

    def forward(self, b):
        return precond_apply(self.ctx, np.asarray(b, dtype=np.complex128))

    def adjoint(self, b):
        return precond_adjoint(self.ctx, np.asarray(b, dtype=np.complex128))
