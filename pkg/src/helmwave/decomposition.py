"""Hierarchical overlapping decomposition of a rectangular Q1 mesh.

Each tree node is a subdomain with a non-overlapping *owned* element box and
an *extended* box (owned box grown by ``overlap_elems`` on every side, clipped
to the parent's extended box). The root is the whole domain. All index maps
of a child are expressed relative to its parent's extended node set, which is
the node set of the parent's local problem.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fem import ElementBox, RectMesh, WavenumberField, assemble_box, full_box


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class LevelSpec:
    levels: tuple[tuple[int, int], ...]
    overlap_elems: int = 2

    def __post_init__(self):
        for mx, my in self.levels:
            if mx < 1 or my < 1:
                raise DecompositionError(f"invalid level {mx}x{my}")
        if self.overlap_elems < 0:
            raise DecompositionError("overlap_elems must be >= 0")

    @classmethod
    def parse(cls, text: str, overlap_elems: int = 2) -> "LevelSpec":
        """Parse ``"2x2,2x2"`` style strings."""
        levels = []
        for part in text.split(","):
            m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", part)
            if not m:
                raise DecompositionError(f"cannot parse level {part!r} in {text!r}")
            levels.append((int(m.group(1)), int(m.group(2))))
        return cls(tuple(levels), overlap_elems)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def total(self) -> tuple[int, int]:
        return (
            int(np.prod([mx for mx, _ in self.levels])),
            int(np.prod([my for _, my in self.levels])),
        )

    def __str__(self) -> str:
        return ",".join(f"{mx}x{my}" for mx, my in self.levels)


@dataclass(eq=False)
class HierarchyNode:
    id: int
    level: int
    owned: ElementBox
    extended: ElementBox
    parent: "HierarchyNode | None" = None
    children: list["HierarchyNode"] = field(default_factory=list)
    neighbors: list[int] = field(default_factory=list)
    # ownership box: owned box with sides on the parent's owned boundary pushed
    # out to the parent's extended boundary, so siblings cover the parent's
    # whole local node set
    ownership: ElementBox | None = None
    # indices of this node's extended nodes in the parent's local ordering (R_i)
    parent_index: np.ndarray | None = None
    # boolean over local nodes: owned in the parent's partition (P_i)
    owned_mask: np.ndarray | None = None
    # local indices of artificial-boundary nodes (B_i)
    boundary: np.ndarray | None = None
    matrix: sp.csr_matrix | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def num_nodes(self) -> int:
        return self.extended.num_nodes

    def __repr__(self) -> str:
        return f"HierarchyNode(id={self.id}, level={self.level}, owned={self.owned}, extended={self.extended})"


@dataclass(eq=False)
class Hierarchy:
    mesh: RectMesh
    field: WavenumberField
    spec: LevelSpec
    root: HierarchyNode
    nodes: list[HierarchyNode]

    @property
    def depth(self) -> int:
        return self.spec.depth

    def level_nodes(self, level: int) -> list[HierarchyNode]:
        return [n for n in self.nodes if n.level == level]

    def leaves(self) -> list[HierarchyNode]:
        return [n for n in self.nodes if n.is_leaf]

    def postorder(self) -> list[HierarchyNode]:
        out: list[HierarchyNode] = []

        def visit(node):
            for c in node.children:
                visit(c)
            out.append(node)

        visit(self.root)
        return out

    def prolong_to_global(self, node: HierarchyNode, u: np.ndarray) -> np.ndarray:
        """Compose P along the path from ``node`` to the root."""
        while node.parent is not None:
            w = np.zeros((node.parent.num_nodes,) + u.shape[1:], dtype=np.complex128)
            w[node.parent_index] = np.where(_bcast(node.owned_mask, u), u, 0)
            u, node = w, node.parent
        return u


def _bcast(mask: np.ndarray, u: np.ndarray) -> np.ndarray:
    return mask.reshape(mask.shape + (1,) * (u.ndim - 1))


def _split(lo: int, hi: int, m: int) -> list[tuple[int, int]]:
    step = (hi - lo) // m
    return [(lo + a * step, lo + (a + 1) * step) for a in range(m)]


def build_hierarchy(
    mesh: RectMesh,
    spec: LevelSpec,
    field: WavenumberField | None = None,
    assemble: bool = True,
) -> Hierarchy:
    """Build the subdomain tree; ids are breadth-first, siblings in x-fastest order.

    With ``assemble=True`` (requires ``field``) every node also gets its local
    impedance matrix; the root's local matrix is the global matrix.
    """
    ov = spec.overlap_elems
    root_box = full_box(mesh)
    root = HierarchyNode(0, 0, root_box, root_box, ownership=root_box)
    nodes = [root]
    frontier = [root]
    for lvl, (mx, my) in enumerate(spec.levels, start=1):
        nxt = []
        for parent in frontier:
            if parent.owned.ex % mx or parent.owned.ey % my:
                raise DecompositionError(
                    f"level {lvl}: subdomain of {parent.owned.ex}x{parent.owned.ey} elements "
                    f"is not divisible by {mx}x{my}"
                )
            pe = parent.extended
            for (j0, j1) in _split(parent.owned.j0, parent.owned.j1, my):
                for (i0, i1) in _split(parent.owned.i0, parent.owned.i1, mx):
                    owned = ElementBox(i0, i1, j0, j1)
                    ext = ElementBox(
                        max(i0 - ov, pe.i0), min(i1 + ov, pe.i1), max(j0 - ov, pe.j0), min(j1 + ov, pe.j1)
                    )
                    po = parent.owned
                    ownership = ElementBox(
                        pe.i0 if i0 == po.i0 else i0,
                        pe.i1 if i1 == po.i1 else i1,
                        pe.j0 if j0 == po.j0 else j0,
                        pe.j1 if j1 == po.j1 else j1,
                    )
                    child = HierarchyNode(len(nodes), lvl, owned, ext, parent=parent, ownership=ownership)
                    parent.children.append(child)
                    nodes.append(child)
                    nxt.append(child)
        frontier = nxt

    for node in nodes:
        if node.children:
            _build_child_maps(node)

    tree = Hierarchy(mesh, field, spec, root, nodes)
    if assemble:
        if field is None:
            raise DecompositionError("assembling local matrices requires a wavenumber field")
        for node in nodes:
            node.matrix = assemble_local(node, mesh, field)
    return tree


def ownership_owner(parent: HierarchyNode) -> np.ndarray:
    """Owning child id for every node of the parent's local node set.

    A node belongs to the lowest-id child whose closed ownership box contains it.
    """
    ix, jy = parent.extended.node_grid()
    owner = np.full(ix.shape, -1, dtype=int)
    for child in reversed(parent.children):
        owner[child.ownership.contains_nodes(ix, jy)] = child.id
    assert (owner >= 0).all()
    return owner


def _build_child_maps(parent: HierarchyNode) -> None:
    pe = parent.extended
    owner = ownership_owner(parent)
    for child in parent.children:
        ix, jy = child.extended.node_grid()
        child.parent_index = pe.local_index(ix, jy)
        child.owned_mask = owner[child.parent_index] == child.id
        # nodes on ∂(child region) that are not on ∂(parent region)
        art = child.extended.on_boundary(ix, jy) & ~pe.on_boundary(ix, jy)
        child.boundary = np.flatnonzero(art)
        child.neighbors = [
            s.id for s in parent.children if s is not child and s.extended.intersects(child.extended)
        ]


def assemble_local(node: HierarchyNode, mesh: RectMesh, field: WavenumberField) -> sp.csr_matrix:
    return assemble_box(mesh, field, node.extended)


def restriction_matrix(child: HierarchyNode) -> sp.csr_matrix:
    """R_i as a sparse 0/1 matrix (child local x parent local)."""
    n = child.num_nodes
    return sp.csr_matrix(
        (np.ones(n), (np.arange(n), child.parent_index)), shape=(n, child.parent.num_nodes)
    )


def prolongation_matrix(child: HierarchyNode) -> sp.csr_matrix:
    """Boolean restricted prolongation P_i (parent local x child local)."""
    idx = np.flatnonzero(child.owned_mask)
    return sp.csr_matrix(
        (np.ones(len(idx)), (child.parent_index[idx], idx)), shape=(child.parent.num_nodes, child.num_nodes)
    )


def boundary_matrix(child: HierarchyNode) -> sp.csr_matrix:
    """B_i: restriction of local values to the artificial boundary."""
    nb = len(child.boundary)
    return sp.csr_matrix((np.ones(nb), (np.arange(nb), child.boundary)), shape=(nb, child.num_nodes))


def partition_of_unity(parent: HierarchyNode) -> sp.csr_matrix:
    """Σ_i P_i R_i over the children of ``parent`` (should be the identity)."""
    n = parent.num_nodes
    S = sp.csr_matrix((n, n))
    for c in parent.children:
        S = S + prolongation_matrix(c) @ restriction_matrix(c)
    return S


@dataclass
class NeighborTraceMap:
    """B_ij restricted to its kept rows; ``matrix`` acts on the local vector of i."""

    source: int
    target: int
    kept_rows: np.ndarray  # local indices in the target's node set
    matrix: sp.csr_matrix


def build_neighbor_trace(src: HierarchyNode, dst: HierarchyNode) -> NeighborTraceMap | None:
    """Robin trace on dst's artificial boundary induced by a local vector of src.

    Application: extend by P_src (zero off owned nodes), restrict with R_dst,
    multiply by Ã_dst and keep the artificial-boundary rows of dst that lie in
    the closed ownership region of src. Returns None if no row is kept.
    """
    if src.parent is not dst.parent:
        raise DecompositionError("neighbor traces are defined between siblings only")
    ix, jy = dst.extended.node_grid()
    bnd = dst.boundary
    keep = bnd[src.ownership.contains_nodes(ix[bnd], jy[bnd])]
    if len(keep) == 0:
        return None
    # R_dst P_src: dst local <- src local, through the parent's node numbering
    parent_n = src.parent.num_nodes
    where_in_dst = np.full(parent_n, -1, dtype=int)
    where_in_dst[dst.parent_index] = np.arange(dst.num_nodes)
    src_idx = np.flatnonzero(src.owned_mask)
    dst_idx = where_in_dst[src.parent_index[src_idx]]
    ok = dst_idx >= 0
    RP = sp.csr_matrix(
        (np.ones(int(ok.sum())), (dst_idx[ok], src_idx[ok])), shape=(dst.num_nodes, src.num_nodes)
    )
    M = dst.matrix[keep] @ RP
    return NeighborTraceMap(src.id, dst.id, keep, sp.csr_matrix(M))


def neighbor_traces(tree: Hierarchy, node: HierarchyNode) -> list[NeighborTraceMap]:
    out = []
    for j in node.neighbors:
        t = build_neighbor_trace(node, tree.nodes[j])
        if t is not None:
            out.append(t)
    return out


def coverage_report(tree: Hierarchy) -> dict[int, np.ndarray]:
    """For every non-root node, how many neighbor maps keep each artificial-boundary row."""
    report = {}
    for node in tree.nodes[1:]:
        counts = np.zeros(len(node.boundary), dtype=int)
        pos = {r: a for a, r in enumerate(node.boundary)}
        for j in node.neighbors:
            t = build_neighbor_trace(tree.nodes[j], node)
            if t is not None:
                for r in t.kept_rows:
                    counts[pos[r]] += 1
        report[node.id] = counts
    return report
