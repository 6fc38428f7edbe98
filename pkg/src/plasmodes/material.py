"""Drude dispersion and the contrast map ``gamma(omega)``.

Units are normalised (``eps0 = mu0 = c0 = 1`` by default).  The contrast is

    gamma(w) = eps_m / (eps_m - eps_c(w)),
    eps_c(w) = eps0 * (1 - wp**2 / (w**2 + i w / T)),

evaluated in the rational form

    gamma = eps_m q / ((eps_m - eps0) q + eps0 wp**2),   q = w**2 + i w / T,

which stays finite at ``w = 0`` and ``w = -i/T``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResonanceSingularityError, SingularityError

__all__ = [
    "DrudeMaterial",
    "TabulatedMaterial",
    "StaticResonance",
    "permittivity",
    "contrast",
    "contrast_derivative",
    "static_resonances",
]


@dataclass(frozen=True)
class DrudeMaterial:
    """Drude metal in a homogeneous non-magnetic background.

    Parameters
    ----------
    omega_p : float
        Plasma frequency.
    T : float
        Collision time; the damping rate is ``1/T``.
    eps_m : float
        Background permittivity.
    eps0 : float
        Vacuum permittivity.
    c0 : float
        Vacuum light speed.
    """

    omega_p: float = 1.0
    T: float = 10.0
    eps_m: float = 1.0
    eps0: float = 1.0
    c0: float = 1.0
    units: str = "normalized"

    def __post_init__(self):
        if not (self.omega_p > 0 and self.T > 0 and self.eps_m > 0 and self.eps0 > 0 and self.c0 > 0):
            raise ValueError("omega_p, T, eps_m, eps0 and c0 must be positive")

    @property
    def c(self) -> float:
        """Light speed in the background medium."""
        return self.c0 / np.sqrt(self.eps_m / self.eps0)

    @property
    def refractive_index(self) -> float:
        return float(np.sqrt(self.eps_m / self.eps0))

    def permittivity(self, omega):
        return permittivity(self, omega)

    def contrast(self, omega):
        return contrast(self, omega)

    def contrast_derivative(self, omega):
        return contrast_derivative(self, omega)


def _q(mat, omega):
    return omega * omega + 1j * omega / mat.T


def permittivity(mat: DrudeMaterial, omega):
    """``eps0 (1 - wp^2 / (w^2 + i w / T))``.

    Raises
    ------
    SingularityError
        At the model poles ``w = 0`` and ``w = -i/T``.
    """
    om = np.asarray(omega, complex)
    q = _q(mat, om)
    if np.any(q == 0):
        raise SingularityError("permittivity evaluated at a Drude pole")
    return mat.eps0 * (1.0 - mat.omega_p ** 2 / q)


def contrast(mat: DrudeMaterial, omega):
    """``gamma(w) = eps_m / (eps_m - eps_c(w))``.

    Raises
    ------
    SingularityError
        When ``eps_c(w) = eps_m``.
    """
    om = np.asarray(omega, complex)
    q = _q(mat, om)
    den = (mat.eps_m - mat.eps0) * q + mat.eps0 * mat.omega_p ** 2
    if np.any(den == 0):
        raise SingularityError("degenerate contrast: eps_c equals eps_m")
    return mat.eps_m * q / den


def contrast_derivative(mat: DrudeMaterial, omega):
    """Analytic ``d gamma / d w``.

    For ``eps_m = eps0`` this is ``(2 w + i/T) / wp^2``.
    """
    om = np.asarray(omega, complex)
    q = _q(mat, om)
    dq = 2.0 * om + 1j / mat.T
    den = (mat.eps_m - mat.eps0) * q + mat.eps0 * mat.omega_p ** 2
    if np.any(den == 0):
        raise SingularityError("degenerate contrast: eps_c equals eps_m")
    return mat.eps_m * mat.eps0 * mat.omega_p ** 2 * dq / den ** 2


@dataclass(frozen=True)
class StaticResonance:
    """Both branches of a static plasmonic resonance.

    ``overdamped`` is set when the radicand is negative; the two roots are
    then purely imaginary and ``plus``/``minus`` hold them.
    """

    gamma_n: float
    plus: complex
    minus: complex
    overdamped: bool


def static_resonances(mat: DrudeMaterial, gammas, tol: float = 1e-14):
    """Closed-form roots of ``gamma(w) = gamma_n`` for a Drude material.

    Parameters
    ----------
    gammas : sequence of float
        Operator eigenvalues ``gamma_n``.

    Returns
    -------
    list of StaticResonance

    Raises
    ------
    ResonanceSingularityError
        For ``gamma_n = 0`` (the excluded constant mode) or a non-positive
        denominator ``1 - ((gamma_n - 1)/gamma_n)(eps_m/eps0)``.
    """
    out = []
    for g in np.atleast_1d(np.asarray(gammas, float)):
        if abs(g) <= tol:
            raise ResonanceSingularityError("gamma_n = 0 is excluded")
        den = 1.0 - ((g - 1.0) / g) * (mat.eps_m / mat.eps0)
        if den <= 0:
            raise ResonanceSingularityError(f"no static resonance for gamma_n = {g}")
        rad = mat.omega_p ** 2 / den - 1.0 / (4.0 * mat.T ** 2)
        im = -1.0 / (2.0 * mat.T)
        if rad >= 0:
            re = np.sqrt(rad)
            out.append(StaticResonance(float(g), complex(re, im), complex(-re, im), False))
        else:
            s = np.sqrt(-rad)
            out.append(StaticResonance(float(g), complex(0.0, im + s), complex(0.0, im - s), True))
    return out


class TabulatedMaterial:
    """Permittivity sampled on a real frequency grid.

    Values are linearly interpolated in ``omega``; only real frequencies are
    supported, so the closed-form resonance formulas do not apply.

    Parameters
    ----------
    omega : (K,) array_like
        Increasing sample frequencies.
    eps : (K,) array_like of complex
        Sampled permittivity.
    eps_m : float
        Background permittivity.
    """

    def __init__(self, omega, eps, eps_m: float = 1.0, c0: float = 1.0, eps0: float = 1.0):
        self.omega = np.asarray(omega, float)
        self.eps = np.asarray(eps, complex)
        if self.omega.ndim != 1 or np.any(np.diff(self.omega) <= 0):
            raise ValueError("omega must be strictly increasing")
        self.eps_m, self.c0, self.eps0 = float(eps_m), float(c0), float(eps0)

    @classmethod
    def from_csv(cls, path, **kw):
        """Load ``omega, Re eps, Im eps`` rows."""
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2], **kw)

    @property
    def c(self) -> float:
        return self.c0 / np.sqrt(self.eps_m / self.eps0)

    def permittivity(self, omega):
        om = np.asarray(omega)
        if np.iscomplexobj(om) and np.any(np.imag(om) != 0):
            raise ValueError("tabulated permittivity is defined on real frequencies only")
        om = np.real(om)
        if np.any((om < self.omega[0]) | (om > self.omega[-1])):
            raise ValueError("frequency outside the tabulated range")
        return np.interp(om, self.omega, self.eps.real) + 1j * np.interp(om, self.omega, self.eps.imag)

    def contrast(self, omega):
        e = self.permittivity(omega)
        if np.any(e == self.eps_m):
            raise SingularityError("degenerate contrast: eps_c equals eps_m")
        return self.eps_m / (self.eps_m - e)
