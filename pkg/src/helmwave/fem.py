"""Q1 finite elements for -Δu - k²u = f on the unit square with impedance
boundary conditions ∂ₙu - iku = g.

Nodes are numbered lexicographically, x fastest: node (ix, jy) has global
index ``ix + jy * (nx + 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

from .linalg import as_csr


@dataclass(frozen=True)
class RectMesh:
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("element counts must be positive")

    @property
    def h(self) -> float:
        return 1.0 / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    @property
    def num_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    def node_index(self, ix, jy):
        return np.asarray(ix) + np.asarray(jy) * (self.nx + 1)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        ix, jy = np.meshgrid(np.arange(self.nx + 1), np.arange(self.ny + 1))
        return ix.ravel() * self.h, jy.ravel() * self.hy


@dataclass(frozen=True)
class Constant:
    k: float

    def __call__(self, x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(self.k))

    @property
    def k_max(self) -> float:
        return float(self.k)


@dataclass(frozen=True)
class LayeredY:
    """k = omega / c(y); c alternates between 1 and c0 on equal horizontal layers.

    ``first_fast=True`` puts c = 1 in the bottom layer y in (0, 1/nlayers).
    """

    omega: float
    c0: float
    nlayers: int
    first_fast: bool = True

    def __post_init__(self):
        if self.nlayers < 1:
            raise ValueError("nlayers must be >= 1")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")

    def speed(self, y):
        layer = np.clip(np.floor(np.asarray(y) * self.nlayers).astype(int), 0, self.nlayers - 1)
        slow_first = not self.first_fast
        use_c0 = (layer % 2 == 1) ^ slow_first
        return np.where(use_c0, self.c0, 1.0)

    def __call__(self, x, y):
        y = np.broadcast_to(np.asarray(y, dtype=float), np.broadcast(np.asarray(x), np.asarray(y)).shape)
        return self.omega / self.speed(y)

    @property
    def k_max(self) -> float:
        return self.omega / min(1.0, self.c0)


WavenumberField = Union[Constant, LayeredY]


def _lin1d(h: float) -> tuple[np.ndarray, np.ndarray]:
    k = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
    m = np.array([[2.0, 1.0], [1.0, 2.0]]) * h / 6.0
    return k, m


def q1_element_matrices(hx: float, hy: float) -> tuple[np.ndarray, np.ndarray]:
    """Element stiffness and mass, local node order (SW, SE, NW, NE)."""
    if hx <= 0 or hy <= 0:
        raise ValueError("element sizes must be positive")
    kx, mx = _lin1d(hx)
    ky, my = _lin1d(hy)
    # x is the fast index in the local ordering, so y factors come first
    K = np.kron(my, kx) + np.kron(ky, mx)
    M = np.kron(my, mx)
    return K, M


def edge_mass(h: float) -> np.ndarray:
    if h <= 0:
        raise ValueError("edge length must be positive")
    return np.array([[2.0, 1.0], [1.0, 2.0]]) * h / 6.0


@dataclass(frozen=True)
class ElementBox:
    """Half-open element index ranges [i0, i1) x [j0, j1)."""

    i0: int
    i1: int
    j0: int
    j1: int

    def __post_init__(self):
        if self.i1 <= self.i0 or self.j1 <= self.j0:
            raise ValueError(f"empty box {self}")

    @property
    def ex(self) -> int:
        return self.i1 - self.i0

    @property
    def ey(self) -> int:
        return self.j1 - self.j0

    @property
    def num_nodes(self) -> int:
        return (self.ex + 1) * (self.ey + 1)

    def node_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Global (ix, jy) of the box's nodes in local lexicographic order."""
        ix, jy = np.meshgrid(np.arange(self.i0, self.i1 + 1), np.arange(self.j0, self.j1 + 1))
        return ix.ravel(), jy.ravel()

    def local_index(self, ix, jy):
        return (np.asarray(ix) - self.i0) + (np.asarray(jy) - self.j0) * (self.ex + 1)

    def contains_nodes(self, ix, jy) -> np.ndarray:
        ix, jy = np.asarray(ix), np.asarray(jy)
        return (ix >= self.i0) & (ix <= self.i1) & (jy >= self.j0) & (jy <= self.j1)

    def on_boundary(self, ix, jy) -> np.ndarray:
        ix, jy = np.asarray(ix), np.asarray(jy)
        return self.contains_nodes(ix, jy) & (
            (ix == self.i0) | (ix == self.i1) | (jy == self.j0) | (jy == self.j1)
        )

    def intersects(self, other: "ElementBox") -> bool:
        """Closed-box intersection (touching counts)."""
        return not (
            self.i1 < other.i0 or other.i1 < self.i0 or self.j1 < other.j0 or other.j1 < self.j0
        )

    def within(self, other: "ElementBox") -> bool:
        return (
            other.i0 <= self.i0 and self.i1 <= other.i1 and other.j0 <= self.j0 and self.j1 <= other.j1
        )


def assemble_box(mesh: RectMesh, field: WavenumberField, box: ElementBox) -> sp.csr_matrix:
    """Helmholtz matrix over the elements of ``box`` with impedance on all of ∂box.

    Node ordering is the box-local lexicographic one. k is sampled at element
    centres for the mass term; on a boundary edge it takes the value of the
    element inside the box adjacent to that edge.
    """
    hx, hy = mesh.h, mesh.hy
    Ke, Me = q1_element_matrices(hx, hy)
    ex, ey = box.ex, box.ey
    nxl = ex + 1

    ei, ej = np.meshgrid(np.arange(ex), np.arange(ey))
    ei, ej = ei.ravel(), ej.ravel()
    xc = (box.i0 + ei + 0.5) * hx
    yc = (box.j0 + ej + 0.5) * hy
    kel = field(xc, yc)

    sw = ei + ej * nxl
    conn = np.stack([sw, sw + 1, sw + nxl, sw + nxl + 1], axis=1)
    vals = Ke[None, :, :] - (kel**2)[:, None, None] * Me[None, :, :]
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    data = vals.reshape(len(sw), 16).ravel().astype(np.complex128)

    # boundary edges: (node a, node b, k of interior element, length)
    kgrid = kel.reshape(ey, ex)
    bottom = np.arange(ex)
    top = np.arange(ex) + ey * nxl
    left = np.arange(ey) * nxl
    right = np.arange(ey) * nxl + ex
    edges = [
        (bottom, bottom + 1, kgrid[0, :], hx),
        (top, top + 1, kgrid[-1, :], hx),
        (left, left + nxl, kgrid[:, 0], hy),
        (right, right + nxl, kgrid[:, -1], hy),
    ]
    brow, bcol, bdata = [rows], [cols], [data]
    for a, b, kedge, length in edges:
        Em = edge_mass(length)
        pair = np.stack([a, b], axis=1)
        brow.append(np.repeat(pair, 2, axis=1).ravel())
        bcol.append(np.tile(pair, (1, 2)).ravel())
        bdata.append((-1j * kedge[:, None, None] * Em[None, :, :]).reshape(len(a), 4).ravel())

    n = box.num_nodes
    A = sp.coo_matrix(
        (np.concatenate(bdata), (np.concatenate(brow), np.concatenate(bcol))), shape=(n, n)
    )
    return as_csr(A)


def full_box(mesh: RectMesh) -> ElementBox:
    return ElementBox(0, mesh.nx, 0, mesh.ny)


def assemble_global(mesh: RectMesh, field: WavenumberField) -> sp.csr_matrix:
    return assemble_box(mesh, field, full_box(mesh))


@dataclass
class AssembledProblem:
    A: sp.csr_matrix
    f: np.ndarray
    mesh: RectMesh
    field: WavenumberField
    u_true: np.ndarray | None = None


def random_solution(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def rhs_from_random_solution(A: sp.spmatrix, seed: int) -> tuple[np.ndarray, np.ndarray]:
    u = random_solution(A.shape[1], seed)
    return A @ u, u


def random_problem(mesh: RectMesh, field: WavenumberField, seed: int) -> AssembledProblem:
    A = assemble_global(mesh, field)
    f, u = rhs_from_random_solution(A, seed)
    return AssembledProblem(A, f, mesh, field, u)


_GAUSS2 = (np.array([-1.0, 1.0]) / np.sqrt(3.0), np.array([1.0, 1.0]))


def planewave_problem(mesh: RectMesh, k: float, direction=(1.0, 0.0)) -> AssembledProblem:
    """Plane wave exp(ik d·x): zero source, impedance data g = (∂ₙ - ik)u on ∂Ω.

    ``u_true`` holds the nodal interpolant of the exact solution.
    """
    d = np.asarray(direction, dtype=float)
    if not np.isclose(np.linalg.norm(d), 1.0):
        raise ValueError("direction must be a unit vector")
    field = Constant(k)
    A = assemble_global(mesh, field)

    def exact(x, y):
        return np.exp(1j * k * (d[0] * x + d[1] * y))

    b = np.zeros(mesh.num_nodes, dtype=np.complex128)
    gp, gw = _GAUSS2
    # (fixed coordinate name, value, outward normal)
    sides = [("y", 0.0, (0.0, -1.0)), ("y", 1.0, (0.0, 1.0)), ("x", 0.0, (-1.0, 0.0)), ("x", 1.0, (1.0, 0.0))]
    for fixed, val, normal in sides:
        ne = mesh.nx if fixed == "y" else mesh.ny
        length = 1.0 / ne
        dn = d[0] * normal[0] + d[1] * normal[1]
        for e in range(ne):
            t = (e + 0.5 + 0.5 * gp) * length  # tangential coordinate of quadrature points
            x, y = (t, np.full_like(t, val)) if fixed == "y" else (np.full_like(t, val), t)
            g = 1j * k * (dn - 1.0) * exact(x, y)
            phi0, phi1 = 0.5 * (1 - gp), 0.5 * (1 + gp)
            w = gw * length / 2
            edge_end = int(round(val * (mesh.ny if fixed == "y" else mesh.nx)))
            if fixed == "y":
                a, c = mesh.node_index(e, edge_end), mesh.node_index(e + 1, edge_end)
            else:
                a, c = mesh.node_index(edge_end, e), mesh.node_index(edge_end, e + 1)
            b[a] += np.sum(w * g * phi0)
            b[c] += np.sum(w * g * phi1)

    x, y = mesh.coords()
    return AssembledProblem(A, b, mesh, field, exact(x, y))
