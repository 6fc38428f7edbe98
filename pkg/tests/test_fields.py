import warnings

import numpy as np
import pytest

from plasmodes.errors import DomainError, SingularityError
from plasmodes.fields import (dyadic_green, exterior_field, incident_dipole, interior_field, quasi_normal_mode,
                              radiation_kernel, renormalized_mode, scattered_from_interior, static_dipole_field,
                              w_projection_residual)

S = np.array([0.0, 0.0, 5.0])
P = np.array([1.0, 0.0, 0.3])


def _random_pairs(rng, n=50):
    x = rng.normal(size=(n, 3))
    y = rng.normal(size=(n, 3))
    k = rng.uniform(0.1, 3.0, n) * np.exp(1j * rng.uniform(-0.3, 0.3, n))
    return x, y, k


def _incident(model, omega, s=S, p=P):
    k = model.k(omega)
    return lambda pts: incident_dipole(s, p, k, pts, scaled=True).values


def test_dyadic_symmetric_and_reciprocal(rng):
    x, y, k = _random_pairs(rng)
    for xi, yi, ki in zip(x, y, k):
        G = dyadic_green(xi, yi, ki)[0]
        assert np.max(np.abs(G - G.T)) <= 1e-12 * np.max(np.abs(G))
        Gr = dyadic_green(yi, xi, ki)[0]
        assert np.max(np.abs(G - Gr.T)) <= 1e-12 * np.max(np.abs(G))


def test_factored_form_matches_hessian_form(rng):
    x, y, k = _random_pairs(rng)
    dev = max(np.max(np.abs(dyadic_green(a, b, c) - dyadic_green(a, b, c, "hessian")))
              / np.max(np.abs(dyadic_green(a, b, c))) for a, b, c in zip(x, y, k))
    assert dev < 1e-8


def test_factored_form_matches_finite_difference_hessian(rng):
    x, y, k = _random_pairs(rng, 10)
    h = 1e-4

    def g(z, kk):
        r = np.linalg.norm(z - yy)
        return np.exp(1j * kk * r) / (4 * np.pi * r)

    for xx, yy, kk in zip(x, y, k):
        H = np.zeros((3, 3), complex)
        E = np.eye(3) * h
        for i in range(3):
            for j in range(3):
                H[i, j] = (g(xx + E[i] + E[j], kk) - g(xx + E[i] - E[j], kk) - g(xx - E[i] + E[j], kk)
                           + g(xx - E[i] - E[j], kk)) / (4 * h * h)
        ref = g(xx, kk) * np.eye(3) + H / kk ** 2
        G = dyadic_green(xx, yy, kk)[0]
        assert np.max(np.abs(G - ref)) < 1e-5 * np.max(np.abs(G))


def test_axis_separation_has_no_off_diagonals():
    G = dyadic_green([2.0, 0.0, 0.0], [0.0, 0.0, 0.0], 0.7)[0]
    assert np.all(G[~np.eye(3, dtype=bool)] == 0)


def test_coincident_points_singular():
    with pytest.raises(SingularityError):
        dyadic_green([1.0, 0, 0], [1.0, 0, 0], 1.0)
    with pytest.raises(SingularityError):
        incident_dipole(S, P, 1.0, S[None])


def test_zero_wavenumber_regular():
    K = radiation_kernel([1.0, 2.0, 0.5], [0.0, 0.0, 0.0], 0.0)
    assert np.all(np.isfinite(K))


def test_incident_linear_in_moment(rng):
    pts = rng.normal(size=(20, 3))
    a = incident_dipole(S, P, 0.3, pts).values
    b = incident_dipole(S, 2 * P, 0.3, pts).values
    assert np.array_equal(2 * a, b)


def test_incident_far_field_decay():
    r = np.geomspace(100.0, 1000.0, 12)
    pts = S + r[:, None] * np.array([1.0, 0.0, 0.0])
    a = np.linalg.norm(incident_dipole(S, P, 1.0, pts).values, axis=1)
    assert np.polyfit(np.log(r), np.log(a), 1)[0] == pytest.approx(-1.0, abs=0.05)


def test_incident_static_limit(rng):
    pts = rng.normal(size=(20, 3))
    a = incident_dipole(S, P, 1e-6, pts, scaled=True).values
    b = static_dipole_field(pts, S, P)
    assert np.max(np.abs(a - b)) < 1e-4 * np.max(np.abs(b))


def test_interior_zero_moment(sphere_pipeline):
    m = sphere_pipeline.model
    E = interior_field(m, 0.5, _incident(m, 0.5, p=np.zeros(3)))
    assert not np.any(E.values)


def test_interior_linear_in_moment(sphere_pipeline):
    m = sphere_pipeline.model
    a = interior_field(m, 0.5, _incident(m, 0.5)).values
    b = interior_field(m, 0.5, _incident(m, 0.5, p=3 * P)).values
    assert np.max(np.abs(3 * a - b)) <= 1e-12 * np.max(np.abs(b))


def test_interior_metadata(sphere_pipeline):
    m = sphere_pipeline.model
    E = interior_field(m, 0.5, _incident(m, 0.5), N=10)
    assert E.meta["N"] == 10 and np.isfinite(E.meta["tail_estimate"])
    with pytest.raises(ValueError):
        interior_field(m, 0.5 + 0.1j, _incident(m, 0.5))


def test_interior_lorentzian_width(sphere_pipeline):
    m = sphere_pipeline.model
    W = m.pole(0).omega
    om = W.real + np.linspace(-4, 4, 161) * abs(W.imag)
    amp = np.array([interior_field(m, w, _incident(m, w, p=[0, 0, 1.0])).norm(m.basis.grid.weights) for w in om])
    half = om[amp ** 2 >= 0.5 * np.max(amp ** 2)]
    fwhm = half[-1] - half[0]
    assert fwhm == pytest.approx(2 * abs(W.imag), rel=0.2)


def test_exterior_rejects_interior_points(sphere_pipeline):
    m = sphere_pipeline.model
    with pytest.raises(DomainError):
        exterior_field(m, 0.5, _incident(m, 0.5), [[0.1, 0.0, 0.0]])


def test_exterior_near_boundary_warns(sphere_pipeline):
    m = sphere_pipeline.model
    with pytest.warns(RuntimeWarning):
        E = exterior_field(m, 0.5, _incident(m, 0.5), [[1.5, 0.0, 0.0], [4.0, 0.0, 0.0]])
    assert E.meta["near"].tolist() == [True, False]


def test_exterior_consistent_with_interior(sphere_pipeline):
    m = sphere_pipeline.model
    pts = np.array([[4.0, 0.0, 0.0], [0.0, 3.5, 2.0], [-6.0, 1.0, 1.0]])
    inc = _incident(m, 0.5)
    ext = exterior_field(m, 0.5, inc, pts)
    via = scattered_from_interior(m, interior_field(m, 0.5, inc), pts)
    assert np.max(np.abs(ext.values - via.values)) <= 1e-12 * np.max(np.abs(ext.values))


def test_exterior_linear_in_moment(sphere_pipeline):
    m = sphere_pipeline.model
    pts = [[4.0, 0.0, 0.0]]
    a = exterior_field(m, 0.5, _incident(m, 0.5), pts).values
    b = exterior_field(m, 0.5, _incident(m, 0.5, p=-2 * P), pts).values
    assert np.max(np.abs(-2 * a - b)) <= 1e-12 * np.max(np.abs(b))


def test_radiation_rayleigh_scaling(sphere_pipeline):
    m = sphere_pipeline.model
    omega, X = 0.5, np.array([[8.0, 3.0, 0.0]])
    ds = np.array([0.01, 0.02, 0.04, 0.08])
    amp = [np.linalg.norm(m.radiation(1, omega * d, X / d, cache=False)[0, :, 0]) for d in ds]
    assert np.polyfit(np.log(ds), np.log(amp), 1)[0] == pytest.approx(3.0, abs=0.2)


def test_quadrupole_radiates_weaker(sphere_pipeline):
    m = sphere_pipeline.model
    x = np.array([[20.0, 0.0, 0.0], [0.0, 20.0, 0.0], [0.0, 0.0, 20.0], [11.5, 11.5, 11.5]])
    R = m.radiation(8, m.k(0.5), x, cache=False)
    dip = np.linalg.norm(R[:, :, 0:3], axis=1).max()
    quad = np.linalg.norm(R[:, :, 3:8], axis=1).max()
    assert quad * 10 <= dip


def test_qnm_interior_is_mode(sphere_pipeline):
    m = sphere_pipeline.model
    pts = m.basis.grid.points[::40]
    q = quasi_normal_mode(m, 2, pts)
    assert np.all(q.meta["inside"])
    assert np.allclose(q.values, m.basis.evaluate_modes(pts, 3)[:, :, 2], rtol=0, atol=1e-14)


def test_qnm_real_frequency_decays_like_inverse_radius(sphere_pipeline):
    m = sphere_pipeline.model
    r = np.geomspace(200.0, 2000.0, 8)
    pts = r[:, None] * np.array([1.0, 1.0, 1.0]) / np.sqrt(3)
    q = quasi_normal_mode(m, 0, pts, omega=m.pole(0).omega.real)
    a = np.linalg.norm(q.values, axis=1)
    assert np.polyfit(np.log(r), np.log(a), 1)[0] == pytest.approx(-1.0, abs=0.05)


def test_renormalized_round_trip(sphere_pipeline):
    m = sphere_pipeline.model
    pts = np.array([[0.2, 0.1, 0.0], [3.0, 0.0, 0.0], [30.0, 5.0, 0.0]])
    q = quasi_normal_mode(m, 0, pts)
    rn = renormalized_mode(m, 0, pts, qnm=q)
    back = rn.values * np.exp(1j * m.k(q.omega) * np.linalg.norm(pts, axis=1))[:, None]
    assert np.max(np.abs(back - q.values)) <= 1e-14 * np.max(np.abs(q.values))
    inner = q.values[0] * np.exp(-1j * m.k(q.omega) * np.linalg.norm(pts[0]))
    assert np.allclose(rn.values[0], inner, rtol=1e-15, atol=0)


def test_projection_residual_non_increasing(sphere_pipeline):
    m = sphere_pipeline.model
    res = [w_projection_residual(m, _incident(m, 0.5), N) for N in (3, 8, 15, 24, 35)]
    assert all(b <= a + 1e-12 for a, b in zip(res, res[1:]))


def test_projection_residual_of_dynamic_part_quadratic(sphere_pipeline):
    m = sphere_pipeline.model
    g = m.basis.grid
    inc = lambda k: (lambda pts: incident_dipole(S, P, k, pts, scaled=True).values)
    E0 = inc(0.0)
    ref = g.norm(E0(g.points))
    ks = np.geomspace(0.01, 0.1, 5)
    out = []
    for k in ks:
        d = (lambda kk: lambda pts: inc(kk)(pts) - E0(pts))(k)
        out.append(w_projection_residual(m, d, 15) * g.norm(d(g.points)) / ref)
    assert np.polyfit(np.log(ks), np.log(out), 1)[0] == pytest.approx(2.0, abs=0.3)
