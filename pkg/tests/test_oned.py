import io

import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, settings
from hypothesis import strategies as st

from helmwave.oned import (
    Mesh1D,
    assemble_1d,
    bisect,
    build_contexts,
    exact_interface_basis,
    hierarchical_basis,
    one_step_solve,
    two_subdomains,
    write_basis_csv,
)
from helmwave.schwarz import ras_apply, schwarz_step

from oracles import crandn


def dense_p1(n, k):
    """Dense P1 assembly by 2-point Gauss quadrature plus the end impedance terms."""
    h = 1.0 / n
    gp = np.array([-1.0, 1.0]) / np.sqrt(3.0)
    A = np.zeros((n + 1, n + 1), dtype=complex)
    for e in range(n):
        for t in gp:
            phi = np.array([(1 - t) / 2, (1 + t) / 2])
            dphi = np.array([-1.0, 1.0]) / h
            loc = np.outer(dphi, dphi) - k**2 * np.outer(phi, phi)
            A[e : e + 2, e : e + 2] += loc * h / 2
    A[0, 0] -= 1j * k
    A[n, n] -= 1j * k
    return A


def test_assembly_matches_dense_oracle():
    A, b = assemble_1d(Mesh1D(8), 5.0, 1.0 + 2j, -3j)
    assert np.abs(A.toarray() - dense_p1(8, 5.0)).max() <= 1e-14
    assert (A - A.T).count_nonzero() == 0
    assert np.count_nonzero(np.triu(A.toarray(), 2)) == 0
    np.testing.assert_array_equal(b[[0, -1]], [1.0 + 2j, -3j])
    assert not b[1:-1].any()


def test_assembly_rejects_bad_input():
    with pytest.raises(ValueError):
        assemble_1d(Mesh1D(8), 0.0)
    with pytest.raises(ValueError):
        Mesh1D(1)


def _planewave_error(n, k):
    mesh = Mesh1D(n)
    A, b = assemble_1d(mesh, k, g0=-2j * k, g1=0.0)
    u = spla.spsolve(A.tocsc(), b)
    ex = np.exp(1j * k * mesh.x)
    return np.linalg.norm(u - ex) / np.linalg.norm(ex)


def test_planewave_second_order():
    ratio = _planewave_error(32, 10.0) / _planewave_error(64, 10.0)
    assert 3.4 <= ratio <= 4.6


def test_two_subdomain_geometry():
    dec = two_subdomains(Mesh1D(16), 4.0)
    left, right = dec.root.children
    assert left.owned == (0, 8) and right.owned == (8, 16)
    assert left.extended == (0, 10) and right.extended == (6, 16)
    # boolean prolongation: nodes 0..8 to the left, 9..16 to the right
    x = np.arange(17)
    own_left = np.zeros(17, bool)
    own_left[left.nodes[left.owned_mask]] = True
    np.testing.assert_array_equal(own_left, x <= 8)
    own_right = np.zeros(17, bool)
    own_right[right.nodes[right.owned_mask]] = True
    np.testing.assert_array_equal(own_right, x > 8)
    assert list(left.nodes[left.boundary]) == [10]
    assert list(right.nodes[right.boundary]) == [6]


def test_bisection_requires_even_split():
    with pytest.raises(ValueError):
        bisect(Mesh1D(6), 2.0, levels=2)


def test_exact_basis_columns_are_a_harmonic():
    mesh, k = Mesh1D(64), 10.0
    dec = two_subdomains(mesh, k)
    C = exact_interface_basis(mesh, k, dec)
    assert C.shape == (65, 2)
    for col, child in zip(C.T, dec.root.children):
        U = spla.spsolve(child.matrix.tocsc(), np.eye(child.num_nodes)[:, child.boundary[0]])
        interior = np.setdiff1d(np.arange(child.num_nodes), child.boundary)
        assert np.abs((child.matrix @ U)[interior]).max() <= 1e-12
        # the column is U restricted to the owned part
        np.testing.assert_allclose(col[child.nodes[child.owned_mask]], U[child.owned_mask], atol=1e-13)


@pytest.mark.parametrize("n", [32, 64, 128])
def test_one_step_exact(n):
    mesh, k = Mesh1D(n), n / 4
    dec = two_subdomains(mesh, k)
    f = crandn(np.random.default_rng(n), n + 1)
    _, err = one_step_solve(mesh, k, dec, f)
    assert err <= 1e-10


def test_one_step_n64_k10_overlap_4h():
    mesh = Mesh1D(64)
    dec = two_subdomains(mesh, 10.0, overlap_elems=4)
    f = crandn(np.random.default_rng(0), 65)
    assert one_step_solve(mesh, 10.0, dec, f)[1] <= 1e-10


@settings(max_examples=15, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    half=st.integers(4, 32),
    overlap=st.integers(1, 3),
    kh=st.floats(0.1, 1.0),
)
def test_one_step_exact_property(seed, half, overlap, kh):
    n = 2 * half
    mesh = Mesh1D(n)
    k = kh * n
    dec = two_subdomains(mesh, k, overlap)
    f = crandn(np.random.default_rng(seed), n + 1)
    assert one_step_solve(mesh, k, dec, f)[1] <= 1e-10


def test_zero_source_gives_zero():
    mesh = Mesh1D(32)
    u, err = one_step_solve(mesh, 8.0, two_subdomains(mesh, 8.0), np.zeros(33, complex))
    assert not u.any() and err == 0.0


def test_without_coarse_not_exact_but_error_in_span():
    mesh, k = Mesh1D(64), 16.0
    dec = two_subdomains(mesh, k)
    f = crandn(np.random.default_rng(1), 65)
    u, err = one_step_solve(mesh, k, dec, f, coarse=False)
    assert err > 1e-2
    ref = spla.spsolve(dec.root.matrix.tocsc(), f)
    e = ref - u
    C = exact_interface_basis(mesh, k, dec)
    coef, *_ = np.linalg.lstsq(C, e, rcond=None)
    assert np.linalg.norm(e - C @ coef) <= 1e-10 * np.linalg.norm(e)


def test_two_level_one_step_exact():
    mesh = Mesh1D(64)
    dec = bisect(mesh, 16.0, levels=2)
    f = crandn(np.random.default_rng(2), 65)
    assert one_step_solve(mesh, 16.0, dec, f)[1] <= 1e-10


def test_hierarchical_basis_has_six_columns():
    dec = bisect(Mesh1D(32), 8.0, levels=2)
    basis = hierarchical_basis(dec)
    assert len(basis) == 6
    assert [lvl for _, lvl, _ in basis] == [0, 0, 1, 1, 1, 1]
    ctx = build_contexts(dec)
    assert set(ctx) == {0, 1, 2}


def test_basis_csv():
    dec = bisect(Mesh1D(16), 4.0, levels=2)
    buf = io.StringIO()
    assert write_basis_csv(buf, dec) == 6
    lines = buf.getvalue().splitlines()
    assert lines[0] == "node_x,re,im,basis_id,level"
    assert len(lines) == 1 + 6 * 17
    buf2 = io.StringIO()
    write_basis_csv(buf2, dec)
    assert buf.getvalue() == buf2.getvalue()


def test_level_one_context_is_plain_sweep():
    dec = two_subdomains(Mesh1D(32), 8.0)
    ctx = build_contexts(dec, coarse=False)[0]
    r = crandn(np.random.default_rng(3), 33)
    np.testing.assert_allclose(schwarz_step(ctx, np.zeros(33, complex), r), ras_apply(ctx, r), atol=1e-14)
