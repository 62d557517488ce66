"""1D model problem: -u'' - k²u = f on (0,1) with impedance ends, P1 elements.

Used to check the Schwarz iteration with an exact interface coarse space: for
two overlapping subdomains the sweep error lies in the span of the two
a-harmonic extensions, so one step with the coarse correction is exact.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .linalg import as_csr
from .schwarz import CoarseSpace, ExactSolve, IterativeSolve, SchwarzContext, schwarz_step


@dataclass(frozen=True)
class Mesh1D:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least 2 elements")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h


def assemble_interval(mesh: Mesh1D, k: float, p0: int, p1: int) -> sp.csr_matrix:
    """P1 matrix on nodes p0..p1 with the impedance term at both ends."""
    ne = p1 - p0
    h = mesh.h
    Ke = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
    Me = np.array([[2.0, 1.0], [1.0, 2.0]]) * h / 6.0
    Ae = Ke - k**2 * Me
    rows, cols, vals = [], [], []
    for e in range(ne):
        for a in range(2):
            for b in range(2):
                rows.append(e + a)
                cols.append(e + b)
                vals.append(Ae[a, b])
    rows += [0, ne]
    cols += [0, ne]
    vals += [-1j * k, -1j * k]
    return as_csr(sp.coo_matrix((vals, (rows, cols)), shape=(ne + 1, ne + 1), dtype=np.complex128))


def assemble_1d(mesh: Mesh1D, k: float, g0: complex = 0.0, g1: complex = 0.0):
    """Global matrix and boundary load for -(u'+iku)(0) = g0, (u'-iku)(1) = g1."""
    if k <= 0:
        raise ValueError("k must be positive")
    A = assemble_interval(mesh, k, 0, mesh.n)
    b = np.zeros(mesh.n + 1, dtype=np.complex128)
    b[0] += g0
    b[-1] += g1
    return A, b


@dataclass(eq=False)
class Interval:
    id: int
    level: int
    owned: tuple[int, int]
    extended: tuple[int, int]
    parent: "Interval | None" = None
    children: list["Interval"] = field(default_factory=list)
    ownership: tuple[int, int] | None = None
    parent_index: np.ndarray | None = None
    owned_mask: np.ndarray | None = None
    boundary: np.ndarray | None = None
    matrix: sp.csr_matrix | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def num_nodes(self) -> int:
        return self.extended[1] - self.extended[0] + 1

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.extended[0], self.extended[1] + 1)


@dataclass(eq=False)
class Decomposition1D:
    mesh: Mesh1D
    k: float
    root: Interval
    nodes: list[Interval]


def bisect(mesh: Mesh1D, k: float, levels: int = 1, overlap_elems: int = 2) -> Decomposition1D:
    """Recursive bisection; children extend ``overlap_elems`` past the cut, clipped to the parent."""
    root = Interval(0, 0, (0, mesh.n), (0, mesh.n), ownership=(0, mesh.n))
    nodes, frontier = [root], [root]
    for lvl in range(1, levels + 1):
        nxt = []
        for par in frontier:
            a, b = par.owned
            if (b - a) % 2:
                raise ValueError(f"level {lvl}: interval of {b - a} elements cannot be bisected")
            mid = (a + b) // 2
            for lo, hi in ((a, mid), (mid, b)):
                ext = (max(lo - overlap_elems, par.extended[0]), min(hi + overlap_elems, par.extended[1]))
                own = (par.extended[0] if lo == a else lo, par.extended[1] if hi == b else hi)
                child = Interval(len(nodes), lvl, (lo, hi), ext, par, ownership=own)
                par.children.append(child)
                nodes.append(child)
                nxt.append(child)
        frontier = nxt

    for node in nodes:
        node.matrix = assemble_interval(mesh, k, *node.extended)
        if node.children:
            pnodes = node.nodes
            owner = np.full(len(pnodes), -1)
            for c in reversed(node.children):
                owner[(pnodes >= c.ownership[0]) & (pnodes <= c.ownership[1])] = c.id
            for c in node.children:
                c.parent_index = c.nodes - node.extended[0]
                c.owned_mask = owner[c.parent_index] == c.id
                ends = [e for e in (0, c.num_nodes - 1) if c.nodes[e] not in node.extended]
                c.boundary = np.array(ends, dtype=int)
    return Decomposition1D(mesh, k, root, nodes)


def two_subdomains(mesh: Mesh1D, k: float, overlap_elems: int = 2) -> Decomposition1D:
    return bisect(mesh, k, 1, overlap_elems)


def _interface_columns(child: Interval, solver) -> np.ndarray:
    """P_c U for a unit Robin datum at each artificial end of the child."""
    E = np.zeros((child.num_nodes, len(child.boundary)), dtype=np.complex128)
    E[child.boundary, np.arange(len(child.boundary))] = 1.0
    U = solver.forward(E)
    out = np.zeros((child.parent.num_nodes, U.shape[1]), dtype=np.complex128)
    out[child.parent_index[child.owned_mask]] = U[child.owned_mask]
    return out


def build_contexts(dec: Decomposition1D, coarse: bool = True) -> dict[int, SchwarzContext]:
    """Bottom-up Schwarz contexts; each parent's coarse basis spans the children's a-harmonic extensions."""
    contexts: dict[int, SchwarzContext] = {}

    def visit(node):
        for c in node.children:
            visit(c)
        if node.is_leaf:
            return
        providers = [ExactSolve.of(c.matrix) if c.is_leaf else IterativeSolve(contexts[c.id]) for c in node.children]
        cs = None
        if coarse:
            cols = [_interface_columns(c, s) for c, s in zip(node.children, providers)]
            blocks = [(c.id, col.shape[1]) for c, col in zip(node.children, cols)]
            cs = CoarseSpace.from_basis(node.id, np.hstack(cols), node.matrix, blocks)
        contexts[node.id] = SchwarzContext(node.matrix, node.children, providers, cs, 1)

    visit(dec.root)
    return contexts


def exact_interface_basis(mesh: Mesh1D, k: float, dec: Decomposition1D | None = None) -> np.ndarray:
    """Two-column coarse basis of the root: restricted a-harmonic extensions of unit data."""
    dec = dec or two_subdomains(mesh, k)
    return build_contexts(dec)[0].coarse.C


def one_step_solve(mesh: Mesh1D, k: float, dec: Decomposition1D, f: np.ndarray, coarse: bool = True):
    """One Schwarz (+ coarse) step from zero; returns (u, relative error vs a direct solve)."""
    ctx = build_contexts(dec, coarse)[0]
    u = schwarz_step(ctx, np.zeros_like(f, dtype=np.complex128), f)
    ref = spla.spsolve(sp.csc_matrix(dec.root.matrix), f)
    nref = np.linalg.norm(ref)
    err = np.linalg.norm(u - ref) / nref if nref else np.linalg.norm(u)
    return u, float(err)


def prolong(dec: Decomposition1D, node: Interval, v: np.ndarray) -> np.ndarray:
    while node.parent is not None:
        w = np.zeros((node.parent.num_nodes,) + v.shape[1:], dtype=np.complex128)
        mask = node.owned_mask.reshape(node.owned_mask.shape + (1,) * (v.ndim - 1))
        w[node.parent_index] = np.where(mask, v, 0)
        v, node = w, node.parent
    return v


def hierarchical_basis(dec: Decomposition1D) -> list[tuple[int, int, np.ndarray]]:
    """All coarse columns prolonged to (0,1): (basis_id, level, vector)."""
    contexts = build_contexts(dec)
    out = []
    for node in dec.nodes:
        if node.id not in contexts:
            continue
        C = prolong(dec, node, contexts[node.id].coarse.C)
        for j in range(C.shape[1]):
            out.append((len(out), node.level, C[:, j]))
    return out


def write_basis_csv(dest, dec: Decomposition1D) -> int:
    """Columns node_x, re, im, basis_id, level; ``dest`` is a path or text stream.

    Returns the number of basis vectors written.
    """
    basis = hierarchical_basis(dec)
    x = dec.mesh.x
    if hasattr(dest, "write"):
        return _write_basis(dest, x, basis)
    with open(Path(dest), "w", newline="", encoding="utf-8") as fh:
        return _write_basis(fh, x, basis)


def _write_basis(fh, x, basis) -> int:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["node_x", "re", "im", "basis_id", "level"])
    for bid, level, v in basis:
        for xp, val in zip(x, v):
            w.writerow([repr(float(xp)), repr(float(val.real)), repr(float(val.imag)), bid, level])
    return len(basis)
