import warnings

import numpy as np
import pytest
import scipy.linalg as sla

from plasmodes.errors import AssemblyQualityError, DomainError
from plasmodes.geometry import make_sphere
from plasmodes.potentials import (LayerMatrices, assemble_layer_matrices, assemble_neumann_poincare,
                                  assemble_single_layer, calderon_residual, eval_grad_single_layer,
                                  eval_single_layer, symmetrized_pencil)


@pytest.fixture(scope="module")
def layers2():
    return make_sphere(1.0, 2), assemble_layer_matrices(make_sphere(1.0, 2))


@pytest.fixture(scope="module")
def layers3():
    return make_sphere(1.0, 3), assemble_layer_matrices(make_sphere(1.0, 3))


def test_uniform_single_layer_is_minus_one_and_converges():
    dev = []
    for r in (1, 2, 3):
        S = assemble_single_layer(make_sphere(1.0, r))
        dev.append(np.max(np.abs(S @ np.ones(len(S)) + 1.0)))
    assert dev[0] > dev[1] > dev[2]
    assert dev[2] < 2e-2


def test_distant_panels_far_field_limit(layers3):
    m, L = layers3
    i = 0
    j = int(np.argmax(np.linalg.norm(m.centroids - m.centroids[i], axis=1)))
    dist = np.linalg.norm(m.centroids[j] - m.centroids[i])
    assert L.S[i, j] == pytest.approx(-m.areas[j] / (4 * np.pi * dist), rel=1e-3)


def test_gram_matrix_positive_definite(layers2):
    _, L = layers2
    assert np.allclose(L.M, L.M.T)
    assert np.linalg.eigvalsh(L.M).min() > 0


def test_constant_density_eigenvalue_one_half():
    err = []
    for r in (1, 2, 3):
        K = assemble_neumann_poincare(make_sphere(1.0, r))
        err.append(np.max(np.abs(K @ np.ones(len(K)) - 0.5)))
    assert err[2] < err[0]
    assert err[2] < 1e-2


def test_pencil_spectrum_bounded_by_one_half(layers3):
    _, L = layers3
    A, M = symmetrized_pencil(L)
    lam = sla.eigh(A, M, eigvals_only=True)
    assert lam.max() <= 0.5 + 5e-3
    assert lam.min() > -0.5


def test_next_cluster_is_one_sixth_triple(layers3):
    _, L = layers3
    A, M = symmetrized_pencil(L)
    lam = np.sort(sla.eigh(A, M, eigvals_only=True))[::-1]
    assert np.allclose(lam[1:4], 1 / 6, atol=1e-2)
    assert abs(lam[4] - 1 / 6) > 3e-2


def test_calderon_asymmetry_below_two_percent(layers3):
    _, L = layers3
    assert calderon_residual(L) < 2e-2


def test_calderon_strictly_decreasing():
    res = [calderon_residual(assemble_layer_matrices(make_sphere(1.0, r))) for r in (1, 2, 3)]
    assert res[0] > res[1] > res[2]


def test_pencil_symmetric_and_real_eigenvalues(layers2):
    _, L = layers2
    A, M = symmetrized_pencil(L)
    assert np.array_equal(A, A.T)
    assert np.isrealobj(sla.eigh(A, M, eigvals_only=True))


def test_eigenvalues_invariant_under_rotation(layers2):
    m, L = layers2
    q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(3, 3)))
    Lr = assemble_layer_matrices(m.transformed(rotation=q))
    a = sla.eigh(*symmetrized_pencil(L), eigvals_only=True)
    b = sla.eigh(*symmetrized_pencil(Lr), eigvals_only=True)
    assert np.max(np.abs(a - b)) < 1e-10


def test_kernels_invariant_under_rigid_motion(layers2, rng):
    m, _ = layers2
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    shift = np.array([0.4, -2.0, 1.0])
    mt = m.transformed(1.0, shift, q)
    dens = rng.normal(size=m.n_panels)
    x = 0.5 * rng.uniform(-1, 1, size=(5, 3)) / np.sqrt(3)
    a = eval_single_layer(m, dens, x)
    b = eval_single_layer(mt, dens, x @ q.T + shift)
    assert np.max(np.abs(a - b)) < 1e-10 * np.max(np.abs(a))


def test_non_definite_gram_raises(layers2):
    _, L = layers2
    bad = LayerMatrices(L.S, L.Kstar, -L.M, L.areas)
    with pytest.raises(AssemblyQualityError):
        symmetrized_pencil(bad)


def test_shell_theorem_uniform_density(layers3, rng):
    m, _ = layers3
    x = 0.4 * rng.uniform(-1, 1, size=(10, 3))
    E, near = eval_grad_single_layer(m, np.ones(m.n_panels), x)
    assert not near.any()
    # polyhedral shell: zero up to the discretisation error of the flat panels
    assert np.max(np.abs(E)) < 1e-4


def test_dipolar_density_gives_uniform_field(layers3, rng):
    m, _ = layers3
    dens = m.normals[:, 2]
    x = 0.4 * rng.uniform(-1, 1, size=(10, 3))
    E, _ = eval_grad_single_layer(m, dens, x)
    mean = E.mean(axis=0)
    assert abs(mean[2]) > 0
    assert np.max(np.linalg.norm(E - mean, axis=1)) < 1e-2 * np.linalg.norm(mean)
    assert np.linalg.norm(mean[:2]) < 1e-2 * abs(mean[2])


def test_gradient_matches_finite_differences(layers2, rng):
    m, _ = layers2
    dens = rng.normal(size=m.n_panels)
    x = 0.5 * rng.uniform(-1, 1, size=(10, 3)) / np.sqrt(3)
    G, _ = eval_grad_single_layer(m, dens, x)
    h = 1e-5
    fd = np.stack([(eval_single_layer(m, dens, x + h * e) - eval_single_layer(m, dens, x - h * e)) / (2 * h)
                   for e in np.eye(3)], axis=1)
    assert np.max(np.abs(G - fd)) / np.max(np.abs(G)) < 1e-6


def test_gradient_outside_is_domain_error(layers2):
    m, _ = layers2
    with pytest.raises(DomainError):
        eval_grad_single_layer(m, np.ones(m.n_panels), [[2.0, 0.0, 0.0]])


def test_gradient_near_boundary_flagged(layers2):
    m, _ = layers2
    with pytest.warns(RuntimeWarning):
        _, near = eval_grad_single_layer(m, np.ones(m.n_panels), [[0.0, 0.0, 0.9], [0.0, 0.0, 0.0]])
    assert near.tolist() == [True, False]
