"""Dynamic plasmonic resonances and pole residues.

A dynamic resonance of mode ``n`` solves

    F(W) = gamma(W) - gamma_n - (W delta / c)^2 alpha_n - i (W delta / c)^3 beta_n = 0,

found by Newton's method from the static pole.  The residue of
``gamma(w) / F(w)`` at a simple root is ``gamma(W) / F'(W)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, SingularityError
from .material import DrudeMaterial, contrast, contrast_derivative, static_resonances

__all__ = [
    "ModeData",
    "PoleRecord",
    "ResonanceSet",
    "dispersion",
    "dispersion_derivative",
    "solve_dynamic_pole",
    "pole_residue",
    "contour_residue",
    "argument_principle_count",
    "resonance_sweep",
]


@dataclass(frozen=True)
class ModeData:
    """Scalar data of one mode entering the dispersion relation."""

    gamma: float
    alpha: float
    beta: float
    eta: float = np.inf

    @classmethod
    def from_coefficients(cls, coeffs, n: int) -> "ModeData":
        return cls(float(coeffs.gamma[n]), float(coeffs.alpha[n]), float(coeffs.beta[n]),
                   float(coeffs.eta[n]))

    def gamma_k(self, k):
        """``gamma_n(k)`` for complex ``k``."""
        return self.gamma + k ** 2 * self.alpha + 1j * k ** 3 * self.beta

    def dgamma_k(self, k):
        return 2.0 * k * self.alpha + 3j * k ** 2 * self.beta


def dispersion(mat: DrudeMaterial, mode: ModeData, delta: float, omega):
    """``F(w) = gamma(w) - gamma_n(w delta / c)``."""
    k = omega * delta / mat.c
    return contrast(mat, omega) - mode.gamma_k(k)


def dispersion_derivative(mat: DrudeMaterial, mode: ModeData, delta: float, omega):
    s = delta / mat.c
    return contrast_derivative(mat, omega) - s * mode.dgamma_k(omega * s)


@dataclass(frozen=True)
class PoleRecord:
    """Outcome of one Newton solve."""

    omega: complex
    static: complex
    iterations: int
    residual: float
    converged: bool
    in_regime: bool
    k_abs: float
    trace: tuple = field(default=(), repr=False)


def solve_dynamic_pole(mat: DrudeMaterial, mode: ModeData, delta: float, branch: int = +1,
                       start=None, tol: float = 1e-12, maxiter: int = 50) -> PoleRecord:
    """Newton iteration for the dynamic pole of one mode.

    Parameters
    ----------
    branch : {+1, -1}
        Static branch used as starting point (sign of the real part).
    start : complex, optional
        Explicit starting point (overrides ``branch``), used for continuation.

    Raises
    ------
    ConvergenceError
        When ``|F| >= tol`` after ``maxiter`` steps; the iterate trace is
        attached.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    st = static_resonances(mat, [mode.gamma])[0]
    w0 = st.plus if branch >= 0 else st.minus
    w = complex(w0 if start is None else start)
    trace = [w]
    res = abs(dispersion(mat, mode, delta, w))
    it = 0
    while res >= tol and it < maxiter:
        d = dispersion_derivative(mat, mode, delta, w)
        if d == 0:
            raise ConvergenceError("vanishing derivative in Newton step", trace)
        w = w - dispersion(mat, mode, delta, w) / d
        it += 1
        trace.append(w)
        res = abs(dispersion(mat, mode, delta, w))
    # a final polish at machine precision may stall just above tol
    if res >= 1e3 * tol:
        raise ConvergenceError(f"Newton did not converge (|F|={res:.3e})", trace)
    kabs = abs(w * delta / mat.c)
    in_regime = bool(kabs <= mode.eta)
    if not in_regime:
        warnings.warn(f"pole outside validity radius (|k|={kabs:.3g} > {mode.eta:.3g})", RuntimeWarning,
                      stacklevel=2)
    return PoleRecord(complex(w), complex(w0), it, float(res), bool(res < tol), in_regime, float(kabs),
                      tuple(trace))


def pole_residue(mat: DrudeMaterial, mode: ModeData, delta: float, omega, tol: float = 1e-10) -> complex:
    """``Res(gamma(w) / F(w), W) = gamma(W) / F'(W)``.

    Raises
    ------
    SingularityError
        If ``|F'(W)| < tol`` (pole not simple).
    """
    d = dispersion_derivative(mat, mode, delta, omega)
    if abs(d) < tol:
        raise SingularityError("non-simple pole: F'(W) vanishes")
    return complex(contrast(mat, omega) / d)


def contour_residue(func, center: complex, radius: float = 1e-4, nodes: int = 64) -> complex:
    """``(1 / 2 pi i) oint func`` on a circle by the trapezoidal rule."""
    th = 2.0 * np.pi * np.arange(nodes) / nodes
    z = center + radius * np.exp(1j * th)
    vals = np.array([func(zz) for zz in z])
    return complex(np.mean(vals * (z - center)))


def argument_principle_count(func, dfunc, center: complex, half_width: float, half_height: float,
                             nodes: int = 400) -> int:
    """Number of zeros of ``func`` in an axis-aligned rectangle.

    Computes ``(1 / 2 pi i) oint f'/f`` with Gauss-Legendre quadrature on
    each side.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    c = complex(center)
    corners = [c + complex(-half_width, -half_height), c + complex(half_width, -half_height),
               c + complex(half_width, half_height), c + complex(-half_width, half_height)]
    total = 0.0 + 0.0j
    for a, b in zip(corners, corners[1:] + corners[:1]):
        z = 0.5 * (a + b) + 0.5 * (b - a) * x
        vals = np.array([dfunc(zz) / func(zz) for zz in z])
        total += 0.5 * (b - a) * np.sum(w * vals)
    return int(round((total / (2j * np.pi)).real))


@dataclass(frozen=True)
class ResonanceSet:
    """Static and dynamic poles for several modes and particle sizes.

    ``rows`` holds dictionaries with keys ``n, delta, branch, static,
    omega, residue, residual, flag``.
    """

    rows: list
    failures: list

    def poles(self, n=None, delta=None, branch=None):
        out = []
        for r in self.rows:
            if (n is None or r["n"] == n) and (delta is None or r["delta"] == delta) and \
                    (branch is None or r["branch"] == branch):
                out.append(r)
        return out

    def boundedness(self):
        om = np.array([r["omega"] for r in self.rows]) if self.rows else np.zeros(0, complex)
        return {"max_abs_re": float(np.max(np.abs(om.real))) if om.size else 0.0,
                "max_abs_im": float(np.max(np.abs(om.imag))) if om.size else 0.0}


def resonance_sweep(mat: DrudeMaterial, modes, deltas, branches=(+1, -1)) -> ResonanceSet:
    """Solve every (mode, delta, branch) combination.

    Poles are continued along increasing ``delta`` from the static pole so
    that the trajectory stays on one branch.  Failures are recorded and the
    sweep continues.

    Parameters
    ----------
    modes : sequence of ModeData
    deltas : sequence of float
    """
    rows, failures = [], []
    ds = sorted(float(d) for d in deltas)
    for n, mode in enumerate(modes):
        for b in branches:
            prev = None
            for d in ds:
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", RuntimeWarning)
                        rec = solve_dynamic_pole(mat, mode, d, branch=b, start=prev)
                    C = pole_residue(mat, mode, d, rec.omega)
                except (ConvergenceError, SingularityError) as exc:
                    failures.append({"n": n, "delta": d, "branch": b, "error": str(exc)})
                    continue
                prev = rec.omega
                flag = "ok" if rec.in_regime else "out_of_regime"
                rows.append({"n": n, "delta": d, "branch": b, "static": rec.static, "omega": rec.omega,
                             "residue": C, "residual": rec.residual, "flag": flag,
                             "iterations": rec.iterations})
    return ResonanceSet(rows, failures)
