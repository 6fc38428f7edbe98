import warnings

import numpy as np
import pytest

from plasmodes.errors import ConvergenceError, SingularityError
from plasmodes.material import DrudeMaterial, contrast, static_resonances
from plasmodes.resonances import (ModeData, argument_principle_count, contour_residue, dispersion,
                                  dispersion_derivative, pole_residue, resonance_sweep, solve_dynamic_pole)

MAT = DrudeMaterial()


@pytest.fixture(scope="module")
def modes(sphere_pipeline):
    c = sphere_pipeline.coeffs
    return [ModeData.from_coefficients(c, n) for n in range(12)]


def test_zero_delta_returns_static_pole(modes):
    rec = solve_dynamic_pole(MAT, modes[0], 0.0)
    st = static_resonances(MAT, [modes[0].gamma])[0]
    assert rec.omega == st.plus and rec.iterations == 0


def test_negative_delta_rejected(modes):
    with pytest.raises(ValueError):
        solve_dynamic_pole(MAT, modes[0], -0.1)


def test_pole_shift_quadratic_in_delta(modes):
    lam = MAT.c0 / MAT.omega_p
    ds = np.geomspace(0.005, 0.05, 6) * lam
    shift = [abs(solve_dynamic_pole(MAT, modes[0], d).omega - solve_dynamic_pole(MAT, modes[0], 0.0).omega)
             for d in ds]
    assert np.polyfit(np.log(ds), np.log(shift), 1)[0] == pytest.approx(2.0, abs=0.1)


def test_root_residual(modes):
    for m in modes:
        rec = solve_dynamic_pole(MAT, m, 0.1)
        assert rec.residual < 1e-12
        assert abs(dispersion(MAT, m, 0.1, rec.omega)) < 1e-10


def test_nonconvergence_carries_trace(modes):
    with pytest.raises(ConvergenceError) as exc:
        solve_dynamic_pole(MAT, modes[0], 0.1, maxiter=1, tol=1e-30)
    assert len(exc.value.trace) == 2


def test_out_of_regime_flagged(modes):
    with pytest.warns(RuntimeWarning):
        rec = solve_dynamic_pole(MAT, modes[0], 1.5)
    assert not rec.in_regime


def test_residue_matches_contour(modes):
    for m in modes[:6]:
        W = solve_dynamic_pole(MAT, m, 0.1).omega
        C = pole_residue(MAT, m, 0.1, W)
        Cc = contour_residue(lambda w: contrast(MAT, w) / dispersion(MAT, m, 0.1, w), W, 1e-4, 64)
        assert abs(C - Cc) < 1e-6 * abs(C)
        assert abs(C) > 0


def test_residue_lossless_static_limit():
    mat = DrudeMaterial(T=1e12)
    g = 1.0 / 3.0
    m = ModeData(g, 0.0, 0.0)
    W = solve_dynamic_pole(mat, m, 0.0).omega
    assert pole_residue(mat, m, 0.0, W) == pytest.approx(g * mat.omega_p ** 2 / (2 * W), rel=1e-10)


def test_residue_singular():
    m = ModeData(1.0 / 3.0, 0.0, 0.0)
    with pytest.raises(SingularityError):
        pole_residue(MAT, m, 0.0, -0.5j / MAT.T)


def test_argument_principle_single_root(modes):
    m = modes[0]
    W = solve_dynamic_pole(MAT, m, 0.1).omega
    n = argument_principle_count(lambda w: dispersion(MAT, m, 0.1, w),
                                 lambda w: dispersion_derivative(MAT, m, 0.1, w), W, 0.05, 0.02)
    assert n == 1


@pytest.fixture(scope="module")
def sweep(modes):
    lam_p = 2 * np.pi * MAT.c0 / MAT.omega_p
    return resonance_sweep(MAT, modes, np.linspace(0.001, 0.05, 12) * lam_p)


def test_sweep_lower_half_plane(sweep):
    assert not sweep.failures
    assert len(sweep.rows) == 12 * 12 * 2
    assert all(r["omega"].imag < 0 for r in sweep.rows)


def test_sweep_branch_symmetry(sweep):
    for r in sweep.poles(branch=+1):
        m = sweep.poles(n=r["n"], delta=r["delta"], branch=-1)[0]
        assert abs(m["omega"] + np.conj(r["omega"])) < 1e-3


def test_sweep_continuity(sweep):
    for n in range(12):
        om = np.array([r["omega"] for r in sweep.poles(n=n, branch=+1)])
        steps = np.abs(np.diff(om))
        assert np.all(steps[1:] < 10 * steps[:-1] + 1e-12)


def test_sweep_boundedness(sweep):
    b = sweep.boundedness()
    assert 0 < b["max_abs_re"] < 2 * MAT.omega_p
    assert 0 < b["max_abs_im"] < 1.0


def test_residues_nonzero(sweep):
    assert all(abs(r["residue"]) > 0 for r in sweep.rows)
