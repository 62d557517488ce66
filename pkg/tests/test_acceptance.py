"""Acceptance criteria 1-8.

Each test records a single PASS/FAIL line (shown in the pytest terminal
summary, or printed directly when this file is run as a script) and then
asserts the criterion. Tolerances are fixed here and never tuned to results.
"""
import statistics
import time

import numpy as np
import pytest

from helmwave.cli import RunConfig, parse_config, spectra, sweep_cells
from helmwave.decomposition import (
    LevelSpec,
    build_hierarchy,
    build_neighbor_trace,
    partition_of_unity,
    prolongation_matrix,
    restriction_matrix,
)
from helmwave.fem import Constant, LayeredY, RectMesh, planewave_problem, q1_element_matrices, random_problem
from helmwave.interface import build_all_coarse, interface_operator, rsvd
from helmwave.linalg import GmresOptions, gmres, lu_factorize, lu_solve, spmv
from helmwave.oned import Mesh1D, assemble_1d, one_step_solve, two_subdomains
from helmwave.pipeline import MethodParams, run_case, setup, solve
from helmwave.schwarz import ExactSolve, precond_adjoint, precond_apply, ras_apply, schwarz_step

from acceptance_log import record
from oracles import (
    crandn,
    dense_assembly,
    dense_box_assembly,
    dense_trace_oracle,
    quad_element,
)

SEEDS = (1, 2, 3)


def median_iterations(levels, n, n_c, problem="free"):
    its = [run_case(levels, n, n_c, problem=problem, seed=s).iterations for s in SEEDS]
    return statistics.median_low(its)


def table_block(cells, problem, levels_of, tol_of):
    """cells: list of (key, n, n_c tuple, published counts)."""
    misses, report = [], []
    for key, n, ncs, published in cells:
        got = tuple(median_iterations(levels_of(key), n, (nc,), problem) for nc in ncs)
        report.append(f"{key}/{n}:{got} vs {published}")
        for nc, g, p in zip(ncs, got, published):
            if abs(g - p) > tol_of(key, nc):
                misses.append((key, n, nc, g, p))
    return misses, "; ".join(report)


# --- 1 ---------------------------------------------------------------------
def test_criterion_1_table1_block():
    t0 = time.perf_counter()
    cells = [
        (2, 4, (0, 2, 3, 4), (6, 5, 4, 3)),
        (2, 8, (0, 1, 5, 7), (7, 9, 5, 3)),
        (4, 4, (0, 4, 5, 6), (15, 8, 4, 3)),
        (8, 4, (0, 6, 7, 8), (32, 6, 4, 3)),
    ]
    misses, detail = table_block(cells, "free", lambda m: f"{m}x{m}", lambda m, nc: 2 if nc > 0 else 3)
    secs = time.perf_counter() - t0
    ok = not misses and secs < 120
    record(1, ok, f"{detail}; {secs:.1f}s")
    assert not misses, misses
    assert secs < 120


# --- 2 ---------------------------------------------------------------------
def test_criterion_2_table2_hierarchical():
    t0 = time.perf_counter()
    cells = [(2, 4, (0, 3, 4, 5), (15, 7, 4, 3)), (3, 4, (0, 4, 5, 6), (32, 7, 4, 3))]
    misses, detail = table_block(
        cells, "free", lambda ell: ",".join(["2x2"] * ell), lambda ell, nc: 2 if ell == 2 else 3
    )
    secs = time.perf_counter() - t0
    ok = not misses and secs < 180
    record(2, ok, f"{detail}; {secs:.1f}s")
    assert not misses, misses
    assert secs < 180


# --- 3 ---------------------------------------------------------------------
def test_criterion_3_table3_layered():
    cells = [(2, 4, (0, 2, 3, 4), (7, 5, 4, 3)), (4, 4, (0, 4, 5, 6), (19, 6, 4, 3))]
    misses, detail = table_block(cells, "layered", lambda m: f"{m}x{m}", lambda m, nc: 2 if m == 2 else 3)
    record(3, not misses, f"c0=5, 8 layers; {detail}")
    assert not misses, misses


# --- 4 ---------------------------------------------------------------------
def test_criterion_4_flat_equals_hierarchical():
    mesh = RectMesh(16, 16)
    field = Constant(16.0)
    params = MethodParams(n_c=(0,), n_i=1)
    flat = setup(mesh, field, LevelSpec.parse("4x4"), params)
    hier = setup(mesh, field, LevelSpec.parse("2x2,2x2"), MethodParams(n_c=(0, 0), n_i=1))
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(5):
        r = crandn(rng, mesh.num_nodes)
        a = precond_apply(flat.preconditioner, r)
        b = precond_apply(hier.preconditioner, r)
        worst = max(worst, np.linalg.norm(a - b) / np.linalg.norm(a))
    prob = random_problem(mesh, field, 1)
    it_flat = solve(prob, flat, params).iterations
    it_hier = solve(prob, hier, params).iterations
    ok = worst <= 1e-12 and it_flat == it_hier
    record(4, ok, f"max rel diff {worst:.2e}; GMRES {it_flat} vs {it_hier}")
    assert worst <= 1e-12
    assert it_flat == it_hier


# --- 5 ---------------------------------------------------------------------
def test_criterion_5_oned_one_step():
    errs = {}
    for n in (32, 64, 128):
        mesh = Mesh1D(n)
        k = n / 4
        f = crandn(np.random.default_rng(n), n + 1)
        errs[n] = one_step_solve(mesh, k, two_subdomains(mesh, k), f)[1]
    ok = max(errs.values()) <= 1e-10
    record(5, ok, ", ".join(f"n={n}: {e:.1e}" for n, e in errs.items()))
    assert ok


# --- 6 ---------------------------------------------------------------------
def test_criterion_6_spectrum_scaling():
    counts, smax, ordered = {}, {}, True
    for n in (8, 16):  # k = 2n = 16, 32 with k h = 1
        cfg = RunConfig(mode="spectrum", levels="2x2", n=n, subdomain=1)
        s = spectra(cfg)[1]
        k = 2 * n
        counts[k] = int((s > 0.1).sum())
        smax[k] = float(s[0])
        ordered &= bool(np.all(np.diff(s) < 0))
    ratio = counts[32] / counts[16]
    ok = 1.5 <= ratio <= 2.5 and ordered
    record(
        6,
        ok,
        f"#(sigma>0.1): k=16 -> {counts[16]}, k=32 -> {counts[32]}, ratio {ratio:.2f} (need [1.5, 2.5]); "
        f"descending={ordered}; sigma_max {smax[16]:.3f}, {smax[32]:.3f} (reported, bound 1.1)",
    )
    assert ordered
    assert 1.5 <= ratio <= 2.5


# --- 7 ---------------------------------------------------------------------
def _rel(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


def property_checks():
    rng = np.random.default_rng(7)
    out = {}
    spec = LevelSpec.parse("2x2")
    mesh = RectMesh(8, 8)
    field = LayeredY(8.0, 5.0, 8)
    tree = build_hierarchy(mesh, spec, field)

    out["partition of unity"] = all(
        np.array_equal(partition_of_unity(nd).toarray(), np.eye(nd.num_nodes))
        for t in (tree, build_hierarchy(RectMesh(16, 16), LevelSpec.parse("2x2,2x2"), assemble=False))
        for nd in t.nodes
        if nd.children
    )

    A = tree.root.matrix
    x, y = crandn(rng, A.shape[0]), crandn(rng, A.shape[0])
    scale = np.linalg.norm(x) * np.linalg.norm(y)
    adj = abs(np.vdot(y, spmv(A, x)) - np.vdot(spmv(A, y, "adjoint"), x)) / scale
    F = lu_factorize(A)
    lhs = np.vdot(y, lu_solve(F, x))
    adj_lu = abs(lhs - np.vdot(lu_solve(F, y, "adjoint"), x)) / abs(lhs)
    node = tree.nodes[1]
    op = interface_operator(tree, node, ExactSolve.of(node.matrix))
    g, z = crandn(rng, op.shape[1]), crandn(rng, op.shape[0])
    lhs = np.vdot(z, op.forward(g))
    adj_t = abs(lhs - np.vdot(op.adjoint(z), g)) / abs(lhs)
    out["adjoint identities"] = max(adj, adj_lu, adj_t) <= 1e-12

    contexts = build_all_coarse(tree, 3, 2, seed=1)
    ctx = contexts[0]
    a = 0.3 - 1.7j
    lin = precond_apply(ctx, a * x + y) - a * precond_apply(ctx, x) - precond_apply(ctx, y)
    out["preconditioner linearity"] = np.linalg.norm(lin) <= 1e-12 * np.linalg.norm(precond_apply(ctx, y))
    lhs = np.vdot(y, precond_apply(ctx, x))
    out["preconditioner adjoint"] = abs(lhs - np.vdot(precond_adjoint(ctx, y), x)) <= 1e-12 * max(1, abs(lhs)) * scale

    ctx1 = build_all_coarse(tree, 4, 1, seed=1)[0]
    u = schwarz_step(ctx1, np.zeros_like(x), x)
    C = ctx1.coarse.C
    out["Galerkin orthogonality"] = np.linalg.norm(C.conj().T @ (x - A @ u)) <= 1e-10 * np.linalg.norm(C.conj().T @ x)

    n_in = op.shape[1]
    res = rsvd(op, n_in - 5, seed=3, key=node.id)
    s_full = np.linalg.svd(op.materialize(), compute_uv=False)
    out["rsvd vs full SVD"] = np.allclose(res.sigma, s_full[: n_in - 5], rtol=1e-8, atol=0)

    worst_b = 0.0
    for i in tree.root.children:
        for j in i.neighbors:
            keep, ref = dense_trace_oracle(tree, i, tree.nodes[j])
            t = build_neighbor_trace(i, tree.nodes[j])
            if len(keep):
                worst_b = max(worst_b, _rel(t.matrix.toarray(), ref))
    e = node.extended
    Ad, _ = dense_box_assembly(mesh, field, e.i0, e.i1, e.j0, e.j1)
    rows = [dense_trace_oracle(tree, node, tree.nodes[j])[1] for j in node.neighbors]
    T_ref = np.vstack([r for r in rows if r.shape[0]]) @ np.linalg.inv(Ad)[:, node.boundary]
    M = sum(
        prolongation_matrix(c).toarray() @ np.linalg.inv(c.matrix.toarray()) @ restriction_matrix(c).toarray()
        for c in tree.root.children
    )
    ras0 = build_all_coarse(tree, 0, 1)[0]
    out["dense oracles B_ij, T_i, RAS"] = max(
        worst_b, _rel(op.materialize(), T_ref), _rel(ras_apply(ras0, x), M @ x)
    ) <= 1e-12

    d = A.diagonal()
    gm = gmres(lambda v: A @ v, lambda v: v / d, x, GmresOptions(1e-5, 400))
    true = np.linalg.norm(x - A @ gm.x) / np.linalg.norm(x)
    out["GMRES true-residual stopping"] = gm.converged and true < 1e-5 and bool(np.all(np.diff(gm.residual_history) <= 0))

    K, Mm = q1_element_matrices(0.25, 0.125)
    Kq, Mq = quad_element(0.25, 0.125)
    A1, _ = assemble_1d(Mesh1D(8), 5.0)
    h = 1 / 8
    D1 = np.zeros((9, 9), complex)
    for el in range(8):
        D1[el : el + 2, el : el + 2] += np.array([[1, -1], [-1, 1]]) / h - 25 * np.array([[2, 1], [1, 2]]) * h / 6
    D1[0, 0] -= 5j
    D1[8, 8] -= 5j
    out["assembly vs quadrature"] = (
        max(np.abs(K - Kq).max(), np.abs(Mm - Mq).max(), np.abs(A1.toarray() - D1).max(),
            np.abs(A.toarray() - dense_assembly(mesh, field)).max()) <= 1e-13
    )

    def pw(nx):
        p = planewave_problem(RectMesh(nx, nx), 8.0, (0.6, 0.8))
        sol = lu_solve(lu_factorize(p.A), p.f)
        return np.linalg.norm(sol - p.u_true) / np.linalg.norm(p.u_true)

    out["plane-wave O(h^2)"] = 3.4 <= pw(16) / pw(32) <= 4.6
    return out


def test_criterion_7_property_suite():
    checks = property_checks()
    failed = [k for k, v in checks.items() if not v]
    record(7, not failed, f"{len(checks) - len(failed)}/{len(checks)} properties" + (f"; failed: {failed}" if failed else ""))
    assert not failed


# --- 8 ---------------------------------------------------------------------
def test_criterion_8_large_configs_accepted():
    big = sweep_cells(parse_config(["sweep", "--preset", "table1", "--n", "32", "--m", "16"])[0])
    layered = sweep_cells(parse_config(["sweep", "--preset", "table3", "--n", "32", "--m", "16"])[0])
    l64 = sweep_cells(parse_config(["sweep", "--preset", "table3-c10-l64", "--n", "32"])[0])
    for c in big + layered + l64:
        c.spec()
    tree = build_hierarchy(RectMesh(512, 512), big[0].spec(), assemble=False)
    ok = (
        len(big) == len(layered) == 4
        and len(l64) == 16
        and all(c.nlayers == 64 and c.c0 == 10.0 for c in l64)
        and len(tree.leaves()) == 256
    )
    record(8, ok, f"m=16,n=32 cells {len(big)}+{len(layered)}, 64-layer cells {len(l64)} accepted (no iteration gate)")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
