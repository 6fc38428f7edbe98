"""Frequency-domain fields in the reference frame of the particle.

Lengths are measured in units of the particle size ``delta`` and the
reference centre ``z`` is the origin, so the dimensionless wavenumber is
``k = omega * delta / c``.  The dyadic kernel is

    Gd^k(x, y) = e^{ikr} / (4 pi r) (I + D^2 / k^2),   r = |x - y|,

written as ``e^{ikr} / (4 pi r) * A(x, y, k) / k^2`` with

    A = (k^2 + (ikr - 1) / r^2) I + (3 - 3ikr - k^2 r^2) / r^2 * rr^T.

``k^2 Gd`` (the radiation kernel) is regular at ``k = 0`` where it reduces to
the static dipole kernel; ``Gd`` itself carries the ``1/k^2`` of the
Hessian term.  Interior fields follow the modal expansion

    E = sum_n gamma / (gamma - gamma_n(k_n)) c_n e_n,

and scattered fields outside ``D`` are ``-(k^2 / gamma) int Gd E``.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError
from .material import DrudeMaterial, contrast
from .perturbation import PerturbationCoefficients
from .potentials import boundary_distance
from .resonances import ModeData, PoleRecord, pole_residue, solve_dynamic_pole
from .spectrum import SpectralBasis, excitation_coefficients

__all__ = [
    "FieldSnapshot",
    "ModalModel",
    "dyadic_green",
    "radiation_kernel",
    "static_dipole_field",
    "incident_dipole",
    "interior_field",
    "exterior_field",
    "scattered_from_interior",
    "quasi_normal_mode",
    "renormalized_mode",
    "growth_fit",
    "w_projection_residual",
    "write_field_csv",
]

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    """Complex vector field sampled at points.

    Attributes
    ----------
    omega : complex
        Frequency (complex for quasi-normal modes).
    points : (P, 3) ndarray
    values : (P, 3) complex ndarray
    provenance : str
        ``incident``, ``interior-modal``, ``exterior-modal``, ``qnm``,
        ``renormalized`` or ``oracle``.
    meta : dict
    """

    omega: complex
    points: np.ndarray
    values: np.ndarray
    provenance: str
    meta: dict = field(default_factory=dict)

    def norm(self, weights=None) -> float:
        w = np.ones(len(self.points)) if weights is None else np.asarray(weights)
        return float(np.sqrt(np.sum(w[:, None] * np.abs(self.values) ** 2)))


def _pairs(x, y):
    x = np.atleast_2d(np.asarray(x, float))
    y = np.atleast_2d(np.asarray(y, float))
    D = x - y
    r = np.linalg.norm(D, axis=-1)
    if np.any(r == 0):
        raise SingularityError("dyadic Green's function evaluated at x = y")
    return D, r


def radiation_kernel(x, y, k):
    """``k^2 Gd^k(x, y)`` as ``(P, 3, 3)``; finite for ``k = 0``.

    ``x`` and ``y`` broadcast against each other.
    """
    D, r = _pairs(x, y)
    k = complex(k)
    rh = D / r[..., None]
    ikr = 1j * k * r
    a = k * k + (ikr - 1.0) / r ** 2
    b = (3.0 - 3.0 * ikr - (k * r) ** 2) / r ** 2
    g = np.exp(ikr) / (FOUR_PI * r)
    return g[..., None, None] * (a[..., None, None] * np.eye(3) + b[..., None, None] * rh[..., :, None] * rh[..., None, :])


def _hessian_form(x, y, k):
    # I g + (1/k^2) D^2 g for g = e^{ikr}/(4 pi r), with the Hessian from the radial derivatives
    D, r = _pairs(x, y)
    rh = D / r[..., None]
    g = np.exp(1j * k * r) / (FOUR_PI * r)
    g1 = g * (1j * k - 1.0 / r)
    g2 = g * ((1j * k - 1.0 / r) ** 2 + 1.0 / r ** 2)
    P = rh[..., :, None] * rh[..., None, :]
    I = np.eye(3)
    H = g2[..., None, None] * P + (g1 / r)[..., None, None] * (I - P)
    return g[..., None, None] * I + H / k ** 2


def dyadic_green(x, y, k, method: str = "A"):
    """Dyadic Green's function ``Gd^k(x, y)``, shape ``(P, 3, 3)``.

    Parameters
    ----------
    method : {"A", "hessian"}
        ``A`` uses the factored closed form; ``hessian`` builds the kernel from
        the scalar Green's function and its radial derivatives.

    Raises
    ------
    SingularityError
        For ``x = y`` or ``k = 0`` (use :func:`radiation_kernel`).
    """
    k = complex(k)
    if k == 0:
        raise SingularityError("Gd^k has a 1/k^2 term; use radiation_kernel for k = 0")
    if method == "A":
        return radiation_kernel(x, y, k) / k ** 2
    if method == "hessian":
        return _hessian_form(x, y, k)
    raise ValueError(f"unknown method {method!r}")


def static_dipole_field(points, s, p):
    """``(3 r (r.p) - p) / (4 pi |x - s|^3)``, the ``k -> 0`` limit of ``k^2 Gd p``."""
    D, r = _pairs(points, s)
    rh = D / r[:, None]
    p = np.asarray(p, float)
    return (3.0 * rh * (rh @ p)[:, None] - p[None]) / (FOUR_PI * r[:, None] ** 3)


def incident_dipole(s, p, k, points, scaled: bool = False) -> FieldSnapshot:
    """Incident field ``Gd^k(x, s) p``.

    With ``scaled=True`` the field is multiplied by ``k^2`` (regular at
    ``k = 0``); the overall factor cancels in every linear response.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    p = np.asarray(p, complex)
    K = radiation_kernel(pts, np.asarray(s, float), k)
    vals = np.einsum("pij,j->pi", K, p)
    if not scaled:
        vals = vals / complex(k) ** 2
    return FieldSnapshot(complex(k), pts, vals, "incident", {"s": np.asarray(s, float), "scaled": scaled})


class ModalModel:
    """Modal data of one particle: basis, perturbation coefficients, poles.

    Parameters
    ----------
    basis : SpectralBasis
        Basis with volume modes (as rotated by ``coeffs``).
    coeffs : PerturbationCoefficients
    mat : DrudeMaterial
    delta : float
        Particle size.
    M : ndarray
        H* Gram matrix, used by the surface coefficient formula.
    """

    def __init__(self, coeffs: PerturbationCoefficients, mat: DrudeMaterial, delta: float, M=None):
        self.coeffs = coeffs
        self.basis: SpectralBasis = coeffs.basis
        self.mat = mat
        self.delta = float(delta)
        self.M = M
        self._poles: dict = {}
        self._rad: dict = {}

    @property
    def n_modes(self) -> int:
        return self.coeffs.n_modes

    def k(self, omega):
        return omega * self.delta / self.mat.c

    def mode(self, n) -> ModeData:
        return ModeData.from_coefficients(self.coeffs, n)

    def pole(self, n: int, branch: int = +1) -> PoleRecord:
        key = (n, 1 if branch >= 0 else -1)
        if key not in self._poles:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                self._poles[key] = solve_dynamic_pole(self.mat, self.mode(n), self.delta, branch=key[1])
        return self._poles[key]

    def residue(self, n: int, branch: int = +1) -> complex:
        return pole_residue(self.mat, self.mode(n), self.delta, self.pole(n, branch).omega)

    def gamma_n(self, n: int, omega=None, branch: int | None = None):
        """``gamma_n(k_n)`` at the frozen pole, or at ``omega`` when given."""
        md = self.mode(n)
        if omega is not None:
            return md.gamma_k(self.k(omega))
        b = +1 if branch is None else branch
        return md.gamma_k(self.k(self.pole(n, b).omega))

    def coefficients(self, incident, N=None, method: str = "surface"):
        """``c_n = <E_in, e_n>`` for a callable incident field."""
        N = self.n_modes if N is None else min(int(N), self.n_modes)
        return excitation_coefficients(self.basis, incident, method=method, M=self.M, n_modes=N).values

    def denominators(self, omega, N, denominators: str = "pole"):
        """``gamma(omega) - gamma_n(.)`` for the first ``N`` modes.

        ``pole`` freezes the perturbation at the dynamic pole of the branch
        matching ``sign(Re omega)``; ``omega`` evaluates it at ``omega``.
        """
        g = contrast(self.mat, omega)
        if denominators == "pole":
            b = +1 if np.real(omega) >= 0 else -1
            gn = np.array([self.gamma_n(n, branch=b) for n in range(N)])
        elif denominators == "omega":
            gn = np.array([self.gamma_n(n, omega=omega) for n in range(N)])
        else:
            raise ValueError(f"unknown denominators {denominators!r}")
        return g, g - gn

    def radiation(self, n_modes: int, k, points, cache: bool = True):
        """``k^2 int_D Gd^k(x, y) e_n(y) dy`` at exterior points, ``(P, 3, N)``.

        Cached per wavenumber and point set unless ``cache`` is false.
        """
        pts = np.atleast_2d(np.asarray(points, float))
        key = (complex(k), pts.tobytes())
        cached = self._rad.get(key) if cache else None
        if cached is not None and cached.shape[2] >= n_modes:
            return cached[:, :, :n_modes]
        grid = self.basis.grid
        E = self.basis.modes[:, :, :n_modes]
        out = np.zeros((len(pts), 3, n_modes), complex)
        for i, x in enumerate(pts):
            K = radiation_kernel(x[None], grid.points, k)
            out[i] = np.einsum("p,pij,pjn->in", grid.weights, K, E)
        if cache:
            self._rad[key] = out
        return out


def _check_exterior(model, pts, near: float = 2.0):
    d = boundary_distance(model.basis.mesh, pts)
    if np.any(d >= 0):
        raise DomainError(f"{int(np.sum(d >= 0))} points lie in the closed body; use interior_field")
    flag = -d < near
    if np.any(flag):
        warnings.warn(f"{int(flag.sum())} exterior points within {near} of the boundary; reduced accuracy",
                      RuntimeWarning, stacklevel=3)
    return flag


def interior_field(model: ModalModel, omega: float, incident, N: int = 15, points=None,
                   denominators: str = "pole", coefficients=None, method: str = "surface") -> FieldSnapshot:
    """Truncated modal expansion of the total field inside the particle.

    Parameters
    ----------
    omega : float
        Real frequency.
    incident : callable
        ``incident(points) -> (P, 3)`` incident field in the reference frame.
    points : (P, 3) array_like, optional
        Interior evaluation points; default the basis grid.
    denominators : {"pole", "omega"}
        Pole-frozen ``gamma_n(k_n)`` or ``gamma_n(omega delta / c)``.
    coefficients : array_like, optional
        Precomputed ``c_n``.
    """
    if np.imag(omega) != 0:
        raise ValueError("interior_field expects a real frequency")
    N = min(int(N), model.n_modes)
    c = model.coefficients(incident, N, method) if coefficients is None else np.asarray(coefficients)[:N]
    g, den = model.denominators(omega, N, denominators)
    if np.min(np.abs(den)) < 1e-8:
        warnings.warn("frequency at a near-singular resonance crossing", RuntimeWarning, stacklevel=2)
    amp = g / den * c
    if points is None:
        pts, E = model.basis.grid.points, model.basis.modes[:, :, :N]
    else:
        pts = np.atleast_2d(np.asarray(points, float))
        E = model.basis.evaluate_modes(pts, N)
    vals = np.einsum("n,pkn->pk", amp, E)
    full = model.coefficients(incident, None, method) if coefficients is None else np.asarray(coefficients)
    g2, den2 = model.denominators(omega, full.size, denominators)
    tail = float(np.linalg.norm((g2 / den2 * full)[N:])) if full.size > N else np.nan
    return FieldSnapshot(complex(omega), pts, vals, "interior-modal",
                         {"N": N, "amplitudes": amp, "coefficients": c, "tail_estimate": tail,
                          "denominators": denominators})


def exterior_field(model: ModalModel, omega: float, incident, points, N: int = 15,
                   denominators: str = "pole", coefficients=None, method: str = "surface") -> FieldSnapshot:
    """Scattered field outside the particle.

    ``E_sca(x) = -sum_n c_n / (gamma - gamma_n) k^2 int Gd(x, y) e_n(y) dy``.

    Raises
    ------
    DomainError
        If a point lies in the closed particle.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    near = _check_exterior(model, pts)
    N = min(int(N), model.n_modes)
    c = model.coefficients(incident, N, method) if coefficients is None else np.asarray(coefficients)[:N]
    g, den = model.denominators(omega, N, denominators)
    R = model.radiation(N, model.k(omega), pts)
    vals = -np.einsum("n,pkn->pk", c / den, R)
    return FieldSnapshot(complex(omega), pts, vals, "exterior-modal", {"N": N, "near": near})


def scattered_from_interior(model: ModalModel, interior: FieldSnapshot, points) -> FieldSnapshot:
    """``-(k^2 / gamma) int_D Gd E`` for an interior field on the basis grid."""
    pts = np.atleast_2d(np.asarray(points, float))
    _check_exterior(model, pts)
    omega = interior.omega
    k = model.k(omega)
    g = contrast(model.mat, omega)
    grid = model.basis.grid
    vals = np.zeros((len(pts), 3), complex)
    for i, x in enumerate(pts):
        K = radiation_kernel(x[None], grid.points, k)
        vals[i] = np.einsum("p,pij,pj->i", grid.weights, K, interior.values)
    return FieldSnapshot(omega, pts, -vals / g, "exterior-modal", {"from": "interior"})


def _split(model, pts):
    d = boundary_distance(model.basis.mesh, pts)
    return d >= 0


def quasi_normal_mode(model: ModalModel, n: int, points, branch: int = +1, omega=None) -> FieldSnapshot:
    """Quasi-normal mode of mode ``n`` at its dynamic pole.

    Inside the particle ``E_n = e_n``; outside
    ``E_n = -k_n^2 int Gd^{k_n} e_n / gamma(Omega_n)`` with ``k_n = Omega_n delta / c``,
    the field whose product with the residue ``C`` gives the residue of the
    scattered field.

    Parameters
    ----------
    omega : complex, optional
        Override of the evaluation frequency (used for diagnostics).
    """
    pts = np.atleast_2d(np.asarray(points, float))
    W = model.pole(n, branch).omega if omega is None else complex(omega)
    k = model.k(W)
    inside = _split(model, pts)
    vals = np.zeros((len(pts), 3), complex)
    if np.any(inside):
        vals[inside] = model.basis.evaluate_modes(pts[inside], n + 1)[:, :, n]
    if np.any(~inside):
        out = pts[~inside]
        grid = model.basis.grid
        e = model.basis.modes[:, :, n]
        acc = np.zeros((len(out), 3), complex)
        for i, x in enumerate(out):
            K = radiation_kernel(x[None], grid.points, k)
            acc[i] = np.einsum("p,pij,pj->i", grid.weights, K, e)
        vals[~inside] = -acc / contrast(model.mat, W)
    return FieldSnapshot(W, pts, vals, "qnm", {"n": n, "branch": branch, "inside": inside})


def renormalized_mode(model: ModalModel, n: int, points, branch: int = +1, qnm=None) -> FieldSnapshot:
    """``E_n(x) exp(-i Omega_n |x - z| / c)``, bounded in ``|x|``."""
    q = quasi_normal_mode(model, n, points, branch) if qnm is None else qnm
    r = np.linalg.norm(q.points, axis=1)
    vals = q.values * np.exp(-1j * model.k(q.omega) * r)[:, None]
    return FieldSnapshot(q.omega, q.points, vals, "renormalized", dict(q.meta))


def growth_fit(model: ModalModel, n: int, radii, direction=(1.0, 1.0, 1.0), branch: int = +1) -> dict:
    """Radial growth diagnostics of a quasi-normal mode along a ray.

    The growth rate is the slope of ``log|E_n(r)| - log|E_n^0(r)|`` in ``r``,
    where ``E_n^0`` is the same radiation integral at ``Re Omega_n``; the
    quotient removes the algebraic near- and far-zone profile, which shares
    its shape at both frequencies.  The expected rate is ``-Im k_n``.

    Returns
    -------
    dict
        ``rate``, ``expected``, ``relative_error``, ``boundedness_ratio``
        (max of ``|renormalized|`` at the largest over the smallest radius)
        and ``naive_rate`` (slope of ``log(r |E_n|)``).
    """
    u = np.asarray(direction, float)
    u = u / np.linalg.norm(u)
    r = np.asarray(radii, float)
    pts = r[:, None] * u[None]
    q = quasi_normal_mode(model, n, pts, branch)
    W = q.omega
    q0 = quasi_normal_mode(model, n, pts, branch, omega=W.real)
    a = np.linalg.norm(q.values, axis=1)
    a0 = np.linalg.norm(q0.values, axis=1)
    rate = np.polyfit(r, np.log(a) - np.log(a0), 1)[0]
    naive = np.polyfit(r, np.log(r * a), 1)[0]
    expected = -model.k(W).imag
    rn = renormalized_mode(model, n, pts, branch, qnm=q)
    m = np.linalg.norm(rn.values, axis=1)
    return {"rate": float(rate), "expected": float(expected),
            "relative_error": float(abs(rate - expected) / abs(expected)),
            "naive_rate": float(naive), "boundedness_ratio": float(m[-1] / m[0]),
            "radii": r, "amplitude": a, "renormalized": m}


def w_projection_residual(model: ModalModel, incident, N: int | None = None, method: str = "surface") -> float:
    """``|E_in - sum_{n<=N} c_n e_n| / |E_in|`` on the basis grid."""
    grid = model.basis.grid
    N = model.n_modes if N is None else min(int(N), model.n_modes)
    Ein = np.asarray(incident(grid.points))
    c = model.coefficients(incident, N, method)
    proj = np.einsum("n,pkn->pk", c, model.basis.modes[:, :, :N])
    return float(grid.norm(Ein - proj) / grid.norm(Ein))


def write_field_csv(snapshot: FieldSnapshot, path) -> None:
    """Write ``x, y, z, Re/Im Ex, Ey, Ez`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "re_Ex", "im_Ex", "re_Ey", "im_Ey", "re_Ez", "im_Ez"])
        for x, v in zip(snapshot.points, snapshot.values):
            w.writerow([f"{x[0]:.12g}", f"{x[1]:.12g}", f"{x[2]:.12g}"]
                       + [f"{t:.12g}" for c in v for t in (c.real, c.imag)])
