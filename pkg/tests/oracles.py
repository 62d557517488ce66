"""Independent dense reference constructions used across the tests."""
import numpy as np

GP = np.array([-1.0, 1.0]) / np.sqrt(3.0)


def quad_element(hx, hy):
    """Q1 matrices by 2x2 Gauss quadrature on the reference square."""
    corners = [(-1, -1), (1, -1), (-1, 1), (1, 1)]  # SW, SE, NW, NE
    K = np.zeros((4, 4))
    M = np.zeros((4, 4))
    jac = hx * hy / 4
    for xi in GP:
        for eta in GP:
            phi = np.array([(1 + a * xi) * (1 + b * eta) / 4 for a, b in corners])
            dx = np.array([a * (1 + b * eta) / 4 * 2 / hx for a, b in corners])
            dy = np.array([b * (1 + a * xi) / 4 * 2 / hy for a, b in corners])
            K += (np.outer(dx, dx) + np.outer(dy, dy)) * jac
            M += np.outer(phi, phi) * jac
    return K, M


def quad_edge(h):
    E = np.zeros((2, 2))
    for t in GP:
        phi = np.array([(1 - t) / 2, (1 + t) / 2])
        E += np.outer(phi, phi) * h / 2
    return E


def dense_box_assembly(mesh, field, i0, i1, j0, j1):
    """Loop assembly over elements [i0,i1)x[j0,j1), impedance on every box edge.

    Returns the dense matrix and the global node index of each local row.
    """
    nxl = i1 - i0 + 1
    glob = [mesh.node_index(i, j) for j in range(j0, j1 + 1) for i in range(i0, i1 + 1)]
    n = len(glob)
    A = np.zeros((n, n), dtype=complex)
    h, hy = mesh.h, mesh.hy
    K, M = quad_element(h, hy)

    def loc(i, j):
        return (i - i0) + (j - j0) * nxl

    for j in range(j0, j1):
        for i in range(i0, i1):
            nodes = [loc(i, j), loc(i + 1, j), loc(i, j + 1), loc(i + 1, j + 1)]
            k = float(field((i + 0.5) * h, (j + 0.5) * hy))
            for a in range(4):
                for b in range(4):
                    A[nodes[a], nodes[b]] += K[a, b] - k**2 * M[a, b]
            edges = []
            if j == j0:
                edges.append(((nodes[0], nodes[1]), h))
            if j == j1 - 1:
                edges.append(((nodes[2], nodes[3]), h))
            if i == i0:
                edges.append(((nodes[0], nodes[2]), hy))
            if i == i1 - 1:
                edges.append(((nodes[1], nodes[3]), hy))
            for (p, q), length in edges:
                E = quad_edge(length)
                for a, pa in enumerate((p, q)):
                    for b, pb in enumerate((p, q)):
                        A[pa, pb] += -1j * k * E[a, b]
    return A, np.array(glob)


def dense_assembly(mesh, field):
    return dense_box_assembly(mesh, field, 0, mesh.nx, 0, mesh.ny)[0]


def selection(rows_glob, cols_glob):
    """0/1 matrix S with S[a, b] = 1 iff rows_glob[a] == cols_glob[b]."""
    return (np.asarray(rows_glob)[:, None] == np.asarray(cols_glob)[None, :]).astype(float)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def ext_nodes_global(tree, node):
    """Global node ids of a node's extended box, in local order."""
    e = node.extended
    return np.array([tree.mesh.node_index(i, j) for j in range(e.j0, e.j1 + 1) for i in range(e.i0, e.i1 + 1)])


def dense_trace_oracle(tree, i, j):
    """B_ij built from dense selection matrices in global numbering."""
    N = tree.mesh.num_nodes
    gi, gj = ext_nodes_global(tree, i), ext_nodes_global(tree, j)
    owner = np.full(N, -1)
    for c in reversed(tree.root.children):
        b = c.ownership
        for p in range(N):
            x, y = p % (tree.mesh.nx + 1), p // (tree.mesh.nx + 1)
            if b.i0 <= x <= b.i1 and b.j0 <= y <= b.j1:
                owner[p] = c.id
    P_i = selection(np.arange(N), gi) * (owner[gi] == i.id)[None, :]
    R_j = selection(gj, np.arange(N))
    e = j.extended
    Aj, _ = dense_box_assembly(tree.mesh, tree.field, e.i0, e.i1, e.j0, e.j1)
    full = Aj @ R_j @ P_i
    ib = i.ownership
    keep = [r for r in j.boundary if ib.i0 <= gj[r] % (tree.mesh.nx + 1) <= ib.i1
            and ib.j0 <= gj[r] // (tree.mesh.nx + 1) <= ib.j1]
    return np.array(keep, dtype=int), full[keep]
