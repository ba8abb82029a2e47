"""Operator assembly against naive stencil and dense-Kronecker oracles."""

import numpy as np
import pytest
import scipy.sparse as sp

from stokes_schur import operators as op
from stokes_schur.errors import InvalidSizeError
from stokes_schur.grid import make_grid

from oracles import curl_dense, derivative_dense, divergence_dense, kron_dense


def test_derivative_1d_smallest():
    d = op.derivative_1d(2, 0.5).toarray()
    np.testing.assert_array_equal(d, [[2.0], [-2.0]])
    d = op.derivative_1d(3, 1.0 / 3.0).toarray()
    np.testing.assert_array_equal(
        d, [[3.0, 0.0], [-3.0, 3.0], [0.0, -3.0]]
    )


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_derivative_1d_matches_loop_oracle(n):
    g = make_grid(n)
    d = op.derivative_1d(n, g.h).toarray()
    np.testing.assert_array_equal(d, derivative_dense(n, g.h))
    # wall values are eliminated, so constants are differenced to zero
    np.testing.assert_array_equal(d.sum(axis=0), np.zeros(n - 1))


def test_derivative_1d_rejects_small_n():
    with pytest.raises(InvalidSizeError):
        op.derivative_1d(1, 1.0)


def test_derivative_gram_matrices_n4():
    # D^T D is the aligned-axis second difference with wall values pinned,
    # D D^T the shifted-axis one with zero-slope ends.
    d = op.derivative_1d(4, 0.25).toarray()
    np.testing.assert_array_equal(
        d.T @ d,
        [[32.0, -16.0, 0.0], [-16.0, 32.0, -16.0], [0.0, -16.0, 32.0]],
    )
    np.testing.assert_array_equal(
        d @ d.T,
        [
            [16.0, -16.0, 0.0, 0.0],
            [-16.0, 32.0, -16.0, 0.0],
            [0.0, -16.0, 32.0, -16.0],
            [0.0, 0.0, -16.0, 16.0],
        ],
    )


@pytest.mark.parametrize("n", [2, 3, 4])
def test_velocity_derivatives_match_dense_kron(n):
    g = make_grid(n)
    bxu, byv, bxq, byq = op.assemble_velocity_derivatives(g)
    d = derivative_dense(n, g.h)
    eye_s = np.eye(n)
    eye_a = np.eye(n - 1)
    np.testing.assert_array_equal(bxu.toarray(), kron_dense(eye_s, d))
    np.testing.assert_array_equal(byv.toarray(), kron_dense(d, eye_s))
    np.testing.assert_array_equal(bxq.toarray(), kron_dense(eye_a, d))
    np.testing.assert_array_equal(byq.toarray(), kron_dense(d, eye_a))


def test_operator_shapes_n4():
    g = make_grid(4)
    ops = op.build_operator_set(g)
    assert ops.B.shape == (16, 24)
    assert ops.C.shape == (9, 24)
    assert ops.A_N.shape == (24, 24)
    assert ops.A_D.shape == (24, 24)
    assert ops.gradient.shape == (24, 16)
    assert ops.B1d.shape == (4, 3)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_divergence_matches_stencil_oracle(n):
    g = make_grid(n)
    b = op.assemble_divergence(g).toarray()
    np.testing.assert_array_equal(b, divergence_dense(n, g.h))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_curl_matches_stencil_oracle(n):
    g = make_grid(n)
    c = op.assemble_curl(g).toarray()
    np.testing.assert_array_equal(c, curl_dense(n, g.h))


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_curl_direct_form_is_identical(n):
    g = make_grid(n)
    np.testing.assert_array_equal(
        op.assemble_curl(g).toarray(), op.assemble_curl_direct(g).toarray()
    )


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_gradient_blocks_stack_to_divergence_transpose(n):
    g = make_grid(n)
    b = op.assemble_divergence(g)
    gpx, gpy = op.assemble_pressure_gradient_blocks(g)
    stacked = sp.vstack([gpx, gpy]).toarray()
    np.testing.assert_array_equal(stacked, b.T.toarray())


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_divergence_annihilates_constants_exactly(n):
    # column sums of B vanish entry by entry, so the discrete gradient of
    # a constant pressure is exactly zero and the pressure gauge is exact
    g = make_grid(n)
    b = op.assemble_divergence(g)
    grad_const = b.T @ np.ones(g.dim_p)
    assert np.all(grad_const == 0.0)


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_mixed_partials_commute_exactly(n):
    assert op.mixed_derivative_residual(make_grid(n)) == 0.0


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_laplacian_neumann_block_structure(n):
    g = make_grid(n)
    a = op.assemble_laplacian_neumann(g).toarray()
    du = g.dim_u
    # u/v cross blocks cancel exactly in floating point
    assert np.all(a[:du, du:] == 0.0)
    assert np.all(a[du:, :du] == 0.0)
    d = derivative_dense(n, g.h)
    eye_s = np.eye(n)
    eye_a = np.eye(n - 1)
    block_u = kron_dense(eye_s, d.T @ d) + kron_dense(d @ d.T, eye_a)
    block_v = kron_dense(d.T @ d, eye_s) + kron_dense(eye_a, d @ d.T)
    np.testing.assert_array_equal(a[:du, :du], block_u)
    np.testing.assert_array_equal(a[du:, du:], block_v)


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_laplacian_neumann_is_spd(n):
    g = make_grid(n)
    a = op.assemble_laplacian_neumann(g).toarray()
    np.testing.assert_array_equal(a, a.T)
    assert np.min(np.linalg.eigvalsh(a)) > 0.0


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_boundary_perturbation_marks_wall_adjacent_rows(n):
    g = make_grid(n)
    i_pert, u, r = op.assemble_perturbation(g, op.BOUNDARY)
    assert r == 4 * (n - 1)
    expected = []
    for i_y in (0, n - 1):
        for i_x in range(n - 1):
            expected.append(i_y * (n - 1) + i_x)
    for i_y in range(n - 1):
        for i_x in (0, n - 1):
            expected.append(g.dim_u + i_y * n + i_x)
    expected = np.sort(np.array(expected))
    np.testing.assert_array_equal(np.flatnonzero(i_pert.diagonal()), expected)
    np.testing.assert_array_equal(u.indices, expected)


@pytest.mark.parametrize("mode", [op.BOUNDARY, op.FULL])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_perturbation_factor_identities(n, mode):
    g = make_grid(n)
    i_pert, u, r = op.assemble_perturbation(g, mode)
    assert u.shape == (r, g.dim_velocity)
    np.testing.assert_array_equal((u.T @ u).toarray(), i_pert.toarray())
    np.testing.assert_array_equal((u @ u.T).toarray(), np.eye(r))


def test_full_perturbation_is_identity():
    g = make_grid(4)
    i_pert, u, r = op.assemble_perturbation(g, op.FULL)
    assert r == g.dim_velocity == 24
    np.testing.assert_array_equal(i_pert.toarray(), np.eye(24))


def test_perturbation_rejects_unknown_mode():
    with pytest.raises(ValueError):
        op.assemble_perturbation(make_grid(4), "partial")


@pytest.mark.parametrize("mode", [op.BOUNDARY, op.FULL])
def test_dirichlet_laplacian_is_exact_shift(mode):
    g = make_grid(4)
    ops = op.build_operator_set(g, mode)
    diff = (ops.A_D - ops.A_N).toarray()
    scale = 2.0 / (g.h * g.h)
    assert scale == 32.0
    np.testing.assert_array_equal(diff, scale * ops.I_pert.toarray())


def test_dirichlet_laplacian_dominates_neumann():
    # the perturbation is PSD, so every ordered eigenvalue moves up; at this
    # size the shift is strict for all of them
    g = make_grid(4)
    ops = op.build_operator_set(g, op.BOUNDARY)
    ev_n = np.linalg.eigvalsh(ops.A_N.toarray())
    ev_d = np.linalg.eigvalsh(ops.A_D.toarray())
    assert np.min(ev_d - ev_n) > 1.0


def test_operator_set_fields_consistent():
    g = make_grid(3)
    ops = op.build_operator_set(g)
    assert ops.mode == op.BOUNDARY
    assert ops.grid is g
    np.testing.assert_array_equal(
        ops.B.toarray(), op.assemble_divergence(g).toarray()
    )
    np.testing.assert_array_equal(
        ops.C.toarray(), op.assemble_curl(g).toarray()
    )
    np.testing.assert_array_equal(
        ops.A_N.toarray(), op.assemble_laplacian_neumann(g).toarray()
    )
    np.testing.assert_array_equal(
        ops.extracted_indices, ops.U.indices
    )
    assert ops.extracted_indices is not ops.U.indices
