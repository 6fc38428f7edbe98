import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from plasmodes.fields import dyadic_green, incident_dipole
from plasmodes.material import DrudeMaterial, contrast, contrast_derivative, permittivity, static_resonances
from plasmodes.resonances import ModeData, dispersion, solve_dynamic_pole
from plasmodes.timedomain import SourceSignal

fin = dict(allow_nan=False, allow_infinity=False)
vec = st.lists(st.floats(-3, 3, **fin), min_size=3, max_size=3).map(np.array)
mats = st.builds(DrudeMaterial, omega_p=st.floats(0.5, 3.0), T=st.floats(2.0, 200.0), eps_m=st.floats(1.0, 3.0))
freq = st.complex_numbers(min_magnitude=0.05, max_magnitude=4.0, **fin).filter(lambda w: w.imag > -0.05)
SET = settings(max_examples=60, deadline=None, derandomize=True)


@SET
@given(mats, freq)
def test_contrast_definition(mat, w):
    g = contrast(mat, w)
    assert np.isclose(g, mat.eps_m / (mat.eps_m - permittivity(mat, w)), rtol=1e-10)


@SET
@given(mats, freq)
def test_contrast_reflection(mat, w):
    assert np.isclose(contrast(mat, -np.conj(w)), np.conj(contrast(mat, w)), rtol=1e-12)


@SET
@given(mats, freq)
def test_contrast_derivative_finite_difference(mat, w):
    h = 1e-6 * max(1.0, abs(w))
    fd = (contrast(mat, w + h) - contrast(mat, w - h)) / (2 * h)
    assert np.isclose(contrast_derivative(mat, w), fd, rtol=1e-5, atol=1e-8)


@SET
@given(mats, st.floats(0.05, 0.45))
def test_static_poles_solve_contrast(mat, g):
    r = static_resonances(mat, [g])[0]
    for w in (r.plus, r.minus):
        assert abs(contrast(mat, w) - g) < 1e-9
        assert w.imag < 0


@SET
@given(st.floats(0.05, 0.45), st.floats(-0.3, 0.0), st.floats(-0.3, 0.0), st.floats(0.0, 0.15))
def test_dynamic_pole_properties(g, a, b, delta):
    mat = DrudeMaterial()
    m = ModeData(g, a, b)
    rec = solve_dynamic_pole(mat, m, delta)
    assert rec.omega.imag < 0
    assert abs(dispersion(mat, m, delta, rec.omega)) < 1e-10
    mirror = solve_dynamic_pole(mat, m, delta, branch=-1).omega
    assert abs(mirror + np.conj(rec.omega)) < 1e-10


@SET
@given(vec, vec, st.floats(0.05, 3.0))
def test_dyadic_symmetry(x, y, k):
    if np.linalg.norm(x - y) < 1e-2:
        return
    G = dyadic_green(x, y, k)[0]
    assert np.allclose(G, G.T, rtol=0, atol=1e-12 * np.abs(G).max())
    assert np.allclose(G, dyadic_green(y, x, k)[0], rtol=0, atol=1e-12 * np.abs(G).max())


@SET
@given(vec, vec, st.floats(-5, 5), st.floats(0.05, 2.0))
def test_incident_linearity(p, q, a, k):
    pts = np.array([[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]])
    s = np.array([0.0, 0.0, 5.0])
    lhs = incident_dipole(s, a * p + q, k, pts).values
    rhs = a * incident_dipole(s, p, k, pts).values + incident_dipole(s, q, k, pts).values
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale * (1 + abs(a))


@SET
@given(st.floats(5.0, 50.0), st.floats(0.1, 2.0), st.complex_numbers(max_magnitude=3.0, **fin))
def test_signal_transform_reflection(C1, w0, w):
    sig = SourceSignal(C1, w0, 0.0, 600)
    assert np.isclose(sig.fhat(-np.conj(w)), np.conj(sig.fhat(w)), rtol=1e-10, atol=1e-14)
