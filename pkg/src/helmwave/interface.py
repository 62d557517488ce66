"""Interface maps T_i, their randomized SVD, and the hierarchical coarse spaces.

T_i takes Robin data g on the artificial boundary of subdomain i, solves the
zero-source local problem Ã_i u = B_iᵀ g (exactly at leaves, by the sublevel
Schwarz iteration otherwise), and evaluates the Robin traces that u induces on
the artificial boundaries of the neighbours.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .decomposition import Hierarchy, HierarchyNode, NeighborTraceMap, neighbor_traces
from .linalg import small_svd, thin_qr
from .schwarz import CoarseSpace, ExactSolve, IterativeSolve, LocalSolveProvider, SchwarzContext

log = logging.getLogger(__name__)


class InterfaceOperator:
    def __init__(self, node: HierarchyNode, provider: LocalSolveProvider, traces: list[NeighborTraceMap]):
        self.node = node
        self.provider = provider
        self.traces = traces
        n_local = node.num_nodes
        if traces:
            self.Bo = sp.vstack([t.matrix for t in traces]).tocsr()
        else:
            self.Bo = sp.csr_matrix((0, n_local), dtype=np.complex128)
        self.BoH = self.Bo.conj().T.tocsr()

    @property
    def shape(self) -> tuple[int, int]:
        return self.Bo.shape[0], len(self.node.boundary)

    def _lift(self, g: np.ndarray) -> np.ndarray:
        u = np.zeros((self.node.num_nodes,) + g.shape[1:], dtype=np.complex128)
        u[self.node.boundary] = g
        return u

    def forward(self, g: np.ndarray) -> np.ndarray:
        if g.shape[0] != self.shape[1]:
            raise ValueError(f"expected {self.shape[1]} interface values, got {g.shape[0]}")
        return self.Bo @ self.provider.forward(self._lift(g))

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        if y.shape[0] != self.shape[0]:
            raise ValueError(f"expected {self.shape[0]} trace values, got {y.shape[0]}")
        w = self.provider.adjoint(self.BoH @ y)
        return w[self.node.boundary]

    def harmonic_extension(self, g: np.ndarray) -> np.ndarray:
        """Local solution S_i(B_iᵀ g) on the subdomain's own nodes."""
        return self.provider.forward(self._lift(g))

    def materialize(self) -> np.ndarray:
        return self.forward(np.eye(self.shape[1], dtype=np.complex128))


def ti_apply(op, g: np.ndarray, mode: str = "forward") -> np.ndarray:
    if mode == "forward":
        return op.forward(g)
    if mode == "adjoint":
        return op.adjoint(g)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class RsvdResult:
    V: np.ndarray
    sigma: np.ndarray
    samples: int
    reduced: bool = False


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def sample_stream(seed: int, key: int) -> np.random.Generator:
    """Random stream keyed by (seed, subdomain id), independent of call order."""
    return np.random.default_rng([int(seed), int(key)])


def _range_basis(Y: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    if Y.shape[0] >= Y.shape[1]:
        return thin_qr(Y, rtol)
    # more samples than outputs: the range may be all of the output space
    if Y.shape[0] == 0:
        return np.zeros((Y.shape[0], 0), dtype=np.complex128)
    Q, R, _ = sla.qr(Y, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d[0] == 0.0:
        return Q[:, :0]
    return Q[:, : int(np.count_nonzero(d > rtol * d[0]))]


def rsvd(op, n_c: int, oversampling: int = 5, seed: int = 0, key: int | None = None) -> RsvdResult:
    """Dominant right singular vectors of ``op`` from n_c + oversampling samples.

    One forward batch, orthogonalisation, one adjoint batch, no power iterations.
    ``op`` needs ``shape``, ``forward`` and ``adjoint``.
    """
    m, n = op.shape
    if key is None:
        key = getattr(getattr(op, "node", None), "id", 0)
    n_c = min(n_c, n)
    samples = min(n_c + oversampling, n)
    if n_c == 0 or samples == 0:
        return RsvdResult(np.zeros((n, 0), dtype=np.complex128), np.zeros(0), 0)
    G = complex_gaussian(sample_stream(seed, key), (n, samples))
    Y = op.forward(G)
    Q = _range_basis(Y)
    Z = op.adjoint(Q)
    _, sigma, V = small_svd(Z.conj().T)
    keep = min(n_c, len(sigma))
    reduced = keep < n_c
    if reduced:
        log.info("rsvd rank collapse for subdomain %s: %d of %d modes", key, keep, n_c)
    return RsvdResult(V[:, :keep], sigma[:keep], samples, reduced)


def interface_operator(tree: Hierarchy, node: HierarchyNode, provider: LocalSolveProvider) -> InterfaceOperator:
    return InterfaceOperator(node, provider, neighbor_traces(tree, node))


def build_coarse_space(
    tree: Hierarchy,
    parent: HierarchyNode,
    providers: list[LocalSolveProvider],
    n_c: int,
    seed: int,
    oversampling: int = 5,
) -> CoarseSpace:
    """C = (C_i) with C_i = P_i S_i(B_iᵀ V_i); Galerkin matrix against the parent's local matrix."""
    n = parent.num_nodes
    cols, blocks, sigmas = [], [], {}
    for child, provider in zip(parent.children, providers):
        op = interface_operator(tree, child, provider)
        res = rsvd(op, n_c, oversampling, seed, key=child.id)
        sigmas[child.id] = res.sigma
        local = op.harmonic_extension(res.V)
        Ci = np.zeros((n, local.shape[1]), dtype=np.complex128)
        mask = child.owned_mask
        Ci[child.parent_index[mask]] = local[mask]
        cols.append(Ci)
        blocks.append((child.id, local.shape[1]))
    C = np.hstack(cols) if cols else np.zeros((n, 0), dtype=np.complex128)
    return CoarseSpace.from_basis(parent.id, C, parent.matrix, blocks, sigmas)


def coarse_counts(n_c, depth: int) -> tuple[int, ...]:
    """Per-level mode counts (level 1 first).

    Given values apply to the deepest levels; missing upper levels double the
    count of the level below them.
    """
    vals = [int(v) for v in (n_c if np.iterable(n_c) else [n_c])]
    if not vals or len(vals) > depth:
        raise ValueError(f"need between 1 and {depth} coarse counts, got {len(vals)}")
    if any(v < 0 for v in vals):
        raise ValueError("coarse counts must be >= 0")
    while len(vals) < depth:
        vals.insert(0, 2 * vals[0])
    return tuple(vals)


def build_all_coarse(
    tree: Hierarchy,
    n_c,
    n_i=1,
    seed: int = 0,
    oversampling: int = 5,
) -> dict[int, SchwarzContext]:
    """Post-order construction of every parent's Schwarz context and coarse space.

    ``n_c[l-1]`` modes are drawn per level-l subdomain. ``n_i[l-1]`` Schwarz
    steps over the level-l partition make up both the preconditioner (l=1)
    and the approximate solves of level-(l-1) subdomains. Returns contexts by
    parent id; ``contexts[0]`` is the global preconditioner.
    """
    depth = tree.depth
    counts = coarse_counts(n_c, depth)
    inner = tuple(int(v) for v in (n_i if np.iterable(n_i) else [n_i] * depth))
    if len(inner) != depth:
        raise ValueError(f"need {depth} inner iteration counts, got {len(inner)}")

    contexts: dict[int, SchwarzContext] = {}
    for node in tree.postorder():
        if node.is_leaf:
            continue
        level = node.level + 1  # level of the children
        providers = [ExactSolve.of(c.matrix) if c.is_leaf else IterativeSolve(contexts[c.id]) for c in node.children]
        coarse = None
        if counts[level - 1] > 0:
            coarse = build_coarse_space(tree, node, providers, counts[level - 1], seed, oversampling)
            log.debug("coarse space of subdomain %d: dim %d", node.id, coarse.dim)
        contexts[node.id] = SchwarzContext(node.matrix, node.children, providers, coarse, inner[level - 1])
    return contexts
