import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from plasmodes.estimator import PlasmonicModalExpansion
from plasmodes.fields import static_dipole_field
from plasmodes.geometry import make_sphere

PARAMS = dict(refinement=2, n_components=8, n_surface=30, n_modes=12, grid_h=0.25)


@pytest.fixture(scope="module")
def est():
    return PlasmonicModalExpansion(**PARAMS).fit()


def _sample(est, p=(1.0, 0.0, 0.3)):
    return static_dipole_field(est.grid_points_, [0.0, 0.0, 5.0], p).reshape(1, -1)


def test_params_round_trip():
    e = PlasmonicModalExpansion(**PARAMS)
    assert e.get_params()["n_components"] == 8
    c = clone(e).set_params(omega=0.4)
    assert c.omega == 0.4 and e.omega == 0.5


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        PlasmonicModalExpansion().transform(np.zeros((1, 3)))


def test_invalid_components():
    with pytest.raises(ValueError):
        PlasmonicModalExpansion(n_components=50, n_modes=12).fit()


def test_fitted_attributes(est):
    assert est.n_features_in_ == 3 * len(est.grid_points_)
    assert est.gamma_.shape == (8,) and est.poles_.shape == (8,)
    assert np.allclose(est.gamma_[:3], 1 / 3, atol=2e-2)
    assert np.all(est.poles_.imag < 0)


def test_fit_accepts_mesh():
    e = PlasmonicModalExpansion(**PARAMS).fit(make_sphere(1.0, 1))
    assert e.pipeline_.mesh.n_panels == 80


def test_shapes(est):
    X = np.vstack([_sample(est), _sample(est, (0.0, 1.0, 0.0))])
    C = est.transform(X)
    assert C.shape == (2, 8)
    assert est.inverse_transform(C).shape == X.shape
    assert est.predict(X).shape == X.shape
    assert est.transform(X[0]).shape == (1, 8)


def test_complex_input_accepted(est):
    X = _sample(est) * (1 + 2j)
    assert np.allclose(est.transform(X), (1 + 2j) * est.transform(_sample(est)))


def test_rejects_bad_input(est):
    with pytest.raises(ValueError):
        est.transform(np.zeros((1, 7)))
    X = _sample(est)
    X[0, 0] = np.nan
    with pytest.raises(ValueError):
        est.transform(X)


def test_round_trip_is_mode_gram(est):
    grid = est.model_.basis.grid
    E = est.model_.basis.modes[:, :, :8]
    gram = np.einsum("p,pkm,pkn->mn", grid.weights, E, E)
    C = np.random.default_rng(0).normal(size=(3, 8))
    back = est.transform(est.inverse_transform(C))
    assert np.max(np.abs(back - C @ gram)) < 1e-12
    assert np.max(np.abs(gram - np.eye(8))) < 5e-2


def test_predict_linear(est):
    X = _sample(est)
    a, b = est.predict(3 * X), 3 * est.predict(X)
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(b))
