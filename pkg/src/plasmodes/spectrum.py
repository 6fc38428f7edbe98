"""Spectral decomposition of the static volume operator through the
symmetrized Neumann-Poincare eigenproblem.

Surface eigenpairs ``(lambda_n, phi_n)`` come from the pencil ``(A, M)``;
the volume modes are ``e_n = grad S[phi_n] / gamma_n`` with
``gamma_n = 1/2 - lambda_n``, sampled on a :class:`~plasmodes.geometry.VolumeGrid`
and renormalised in the discrete L2 inner product.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, ResonanceSingularityError
from .geometry import SurfaceMesh, VolumeGrid
from .potentials import TEST_RULE, eval_grad_single_layer

__all__ = [
    "SpectralBasis",
    "ExcitationCoefficients",
    "DecayReport",
    "StaticSolution",
    "cluster_eigenvalues",
    "solve_spectrum",
    "build_volume_modes",
    "excitation_coefficients",
    "decay_diagnostic",
    "static_solution",
    "isolation_distances",
]


def cluster_eigenvalues(values, tol: float):
    """Group sorted eigenvalues whose consecutive gaps are below ``tol``.

    Returns
    -------
    list of ndarray
        Index arrays, in the order of ``values``.
    """
    values = np.asarray(values, float)
    if values.size == 0:
        return []
    cuts = np.where(np.abs(np.diff(values)) > tol)[0] + 1
    return [np.asarray(c) for c in np.split(np.arange(values.size), cuts)]


def isolation_distances(values, clusters):
    """Distance from each eigenvalue's cluster to the nearest other cluster."""
    values = np.asarray(values, float)
    means = np.array([values[c].mean() for c in clusters])
    d = np.empty(values.size)
    for j, c in enumerate(clusters):
        others = np.delete(means, j)
        d[c] = np.min(np.abs(others - means[j])) if others.size else np.inf
    return d


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigen-decomposition of the static operator.

    Attributes
    ----------
    lam : (K,) ndarray
        Neumann-Poincare eigenvalues, descending.
    phi : (N_panels, K) ndarray
        H*-orthonormal surface eigenfunctions.
    gamma : (K,) ndarray
        ``1/2 - lam``.
    clusters : list of ndarray
        Degenerate groups (indices into ``lam``).
    isolation : (K,) ndarray
        Cluster-aware isolation distance ``d_n``.
    mesh : SurfaceMesh
    grid : VolumeGrid or None
    modes : (P, 3, Nw) ndarray or None
        L2-orthonormal volume modes on ``grid``; mode ``j`` corresponds to
        surface index ``w_index[j]``.
    traces : (N_panels, Nw) ndarray or None
        Normal traces ``e_n . nu`` on the panels.
    w_index : ndarray or None
        Surface indices of the retained volume modes.
    skipped : tuple
        Surface indices excluded because ``gamma_n`` is (near) zero.
    raw_norms : ndarray or None
        L2 norms of ``grad S[phi_n] / gamma_n`` before renormalisation.
    synthesis : ndarray or None
        ``(Nw, Nw)`` matrix with ``modes = grad S[phi[:, w_index]] @ synthesis``;
        block diagonal over clusters, so modes can be evaluated off the grid.
    """

    lam: np.ndarray
    phi: np.ndarray
    gamma: np.ndarray
    clusters: list
    isolation: np.ndarray
    mesh: SurfaceMesh
    grid: VolumeGrid | None = None
    modes: np.ndarray | None = None
    traces: np.ndarray | None = None
    w_index: np.ndarray | None = None
    skipped: tuple = ()
    raw_norms: np.ndarray | None = None
    synthesis: np.ndarray | None = None
    cluster_tol: float = field(default=2e-3)

    @property
    def n_modes(self) -> int:
        return 0 if self.modes is None else self.modes.shape[2]

    @property
    def w_gamma(self) -> np.ndarray:
        """``gamma_n`` of the retained volume modes."""
        return self.gamma[self.w_index]

    @property
    def w_isolation(self) -> np.ndarray:
        return self.isolation[self.w_index]

    def w_clusters(self):
        """Degenerate groups expressed in volume-mode indices."""
        pos = {int(s): j for j, s in enumerate(self.w_index)}
        out = []
        for c in self.clusters:
            idx = [pos[int(s)] for s in c if int(s) in pos]
            if idx:
                out.append(np.array(idx))
        return out

    def rotated(self, rotations) -> "SpectralBasis":
        """Apply orthogonal intra-cluster rotations to the volume modes.

        Parameters
        ----------
        rotations : dict
            Maps a tuple of volume-mode indices to an orthogonal matrix ``Q``;
            new modes are ``modes[:, :, idx] @ Q``.
        """
        modes = self.modes.copy()
        traces = self.traces.copy()
        phi = self.phi.copy()
        syn = self.synthesis.copy()
        for idx, Q in rotations.items():
            idx = np.asarray(idx)
            modes[:, :, idx] = modes[:, :, idx] @ Q
            traces[:, idx] = traces[:, idx] @ Q
            s = self.w_index[idx]
            phi[:, s] = phi[:, s] @ Q
            blk = np.ix_(idx, idx)
            syn[blk] = Q.T @ syn[blk] @ Q
        return replace(self, modes=modes, traces=traces, phi=phi, synthesis=syn)

    def evaluate_modes(self, points, n_modes: int | None = None, check_domain: bool = True):
        """Volume modes at arbitrary interior points, shape ``(P, 3, N)``.

        Agrees with ``modes`` on the basis grid.
        """
        N = self.n_modes if n_modes is None else min(int(n_modes), self.n_modes)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            G, _ = eval_grad_single_layer(self.mesh, self.phi[:, self.w_index], points,
                                          check_domain=check_domain)
        return np.einsum("pkm,mn->pkn", G, self.synthesis[:, :N])


def solve_spectrum(A, M, count: int, mesh: SurfaceMesh, cluster_tol: float = 2e-3) -> SpectralBasis:
    """Leading ``count`` eigenpairs of the pencil ``(A, M)`` by descending lambda.

    Raises
    ------
    ConvergenceError
        If the dense symmetric-definite solver fails; the message carries the
        condition number of ``M``.
    """
    N = A.shape[0]
    count = int(min(count, N))
    try:
        lam, phi = sla.eigh(A, M, subset_by_index=[N - count, N - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"generalized eigensolver failed (cond(M)={np.linalg.cond(M):.3e})") from exc
    lam, phi = lam[::-1], phi[:, ::-1]
    # fix sign: largest-magnitude entry positive, for reproducibility
    piv = np.argmax(np.abs(phi), axis=0)
    phi = phi * np.sign(phi[piv, np.arange(phi.shape[1])])
    gamma = 0.5 - lam
    clusters = cluster_eigenvalues(lam, cluster_tol)
    return SpectralBasis(lam, phi, gamma, clusters, isolation_distances(gamma, clusters), mesh,
                         cluster_tol=cluster_tol)


def build_volume_modes(basis: SpectralBasis, grid: VolumeGrid, gamma_tol: float = 1e-3) -> SpectralBasis:
    """Evaluate ``e_n = grad S[phi_n] / gamma_n`` on a grid.

    Modes with ``gamma_n <= gamma_tol`` are skipped (the constant-density
    mode at lambda = 1/2 has no interior field) and reported in ``skipped``.
    """
    keep = np.where(basis.gamma > gamma_tol)[0]
    skipped = tuple(int(i) for i in np.where(basis.gamma <= gamma_tol)[0])
    if skipped:
        warnings.warn(f"skipping {len(skipped)} mode(s) with gamma <= {gamma_tol}", RuntimeWarning,
                      stacklevel=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        E, _ = eval_grad_single_layer(basis.mesh, basis.phi[:, keep], grid.points)
    E /= basis.gamma[keep]
    raw = np.sqrt(np.einsum("p,pkn,pkn->n", grid.weights, E, E))
    E /= raw
    # interior normal trace of grad S[phi] is -gamma * phi
    traces = -basis.phi[:, keep] / raw
    return replace(basis, grid=grid, modes=E, traces=traces, w_index=keep, skipped=skipped,
                   raw_norms=raw, synthesis=np.diag(1.0 / (basis.gamma[keep] * raw)))


@dataclass(frozen=True)
class ExcitationCoefficients:
    """Projections ``c_n = <E_in, e_n>`` of an incident field."""

    values: np.ndarray
    method: str
    decay: "DecayReport | None" = None


def _surface_normal_component(mesh: SurfaceMesh, incident):
    A, B, C = mesh.corners
    acc = 0.0
    for bary, wq in TEST_RULE:
        x = bary[0] * A + bary[1] * B + bary[2] * C
        acc = acc + wq * np.einsum("pk,pk->p", np.asarray(incident(x)), mesh.normals)
    return acc


def excitation_coefficients(basis: SpectralBasis, incident, method: str = "volume", M=None,
                            n_modes: int | None = None) -> ExcitationCoefficients:
    """Project an incident field onto the volume modes.

    Parameters
    ----------
    incident : callable
        ``incident(points) -> (P, 3)`` field in the reference frame.
    method : {"volume", "surface"}
        ``volume`` uses the grid inner product; ``surface`` uses the H*
        pairing of normal traces, ``c_n = (E.nu)^T M (e_n.nu) / gamma_n``,
        which is exact for fields of the form grad(harmonic).
    M : ndarray, optional
        H* Gram matrix, required for ``method="surface"``.
    """
    N = basis.n_modes if n_modes is None else min(n_modes, basis.n_modes)
    if method == "volume":
        Ein = np.asarray(incident(basis.grid.points))
        vals = np.einsum("p,pk,pkn->n", basis.grid.weights, Ein, basis.modes[:, :, :N])
    elif method == "surface":
        if M is None:
            raise ValueError("surface method needs the Gram matrix M")
        En = _surface_normal_component(basis.mesh, incident)
        vals = (En @ M @ basis.traces[:, :N]) / basis.w_gamma[:N]
    else:
        raise ValueError(f"unknown method {method!r}")
    return ExcitationCoefficients(np.asarray(vals), method)


@dataclass(frozen=True)
class DecayReport:
    """Least-squares decay fit of excitation coefficients.

    ``loglog_slope`` is the slope of ``log|c_n|`` against ``log n`` and
    ``linear_slope`` the slope against ``n``; ``faster_than[p]`` is true when
    the log-log slope is below ``-p``.
    """

    n: np.ndarray
    magnitude: np.ndarray
    loglog_slope: float
    linear_slope: float
    faster_than: dict
    defined: bool
    note: str = ""


def decay_diagnostic(coeffs, clusters=None, n_range=(3, 20), powers=(2, 4, 8)) -> DecayReport:
    """Fit the decay of ``|c_n|`` over mode numbers ``n`` (1-based).

    When ``clusters`` (volume-mode index groups) are supplied, each
    coefficient is replaced by the RMS over its degenerate group, which makes
    the fit independent of the basis chosen inside a cluster.
    """
    c = np.asarray(getattr(coeffs, "values", coeffs))
    mag = np.abs(c).astype(float)
    if clusters is not None:
        for g in clusters:
            g = g[g < mag.size]
            if g.size:
                mag[g] = np.sqrt(np.mean(mag[g] ** 2))
    n = np.arange(1, mag.size + 1)
    sel = (n >= n_range[0]) & (n <= n_range[1])
    if sel.sum() < 2:
        return DecayReport(n, mag, np.nan, np.nan, {p: False for p in powers}, False, "too few modes")
    if np.all(mag == 0):
        return DecayReport(n, mag, -np.inf, -np.inf, {p: True for p in powers}, False,
                           "all coefficients vanish")
    floor = np.finfo(float).tiny
    y = np.log(np.maximum(mag[sel], floor))
    s_log = np.polyfit(np.log(n[sel]), y, 1)[0]
    s_lin = np.polyfit(n[sel], y, 1)[0]
    return DecayReport(n, mag, float(s_log), float(s_lin), {p: bool(s_log < -p) for p in powers}, True)


@dataclass(frozen=True)
class StaticSolution:
    """Truncated static modal field on the basis grid."""

    field: np.ndarray
    amplitudes: np.ndarray
    n_modes: int
    truncation_estimate: float


def static_solution(basis: SpectralBasis, coeffs, gamma: complex, N: int | None = None,
                    tol: float = 1e-12) -> StaticSolution:
    """``E = sum_n gamma / (gamma - gamma_n) c_n e_n`` over the first N modes.

    The truncation estimate is the norm of the omitted amplitudes when more
    coefficients than ``N`` are supplied, otherwise the amplitude norm of the
    last retained cluster.

    Raises
    ------
    ResonanceSingularityError
        If ``gamma`` coincides with some ``gamma_n``.
    """
    c = np.asarray(getattr(coeffs, "values", coeffs))
    N = min(c.size, basis.n_modes) if N is None else int(N)
    g = basis.w_gamma
    if np.min(np.abs(gamma - g[:max(N, 1)])) <= tol:
        raise ResonanceSingularityError("contrast coincides with an operator eigenvalue")
    amp_all = gamma / (gamma - g[:c.size]) * c
    amp = amp_all[:N]
    field = np.einsum("n,pkn->pk", amp, basis.modes[:, :, :N])
    if c.size > N:
        est = float(np.linalg.norm(amp_all[N:]))
    else:
        last = [cl for cl in basis.w_clusters() if cl.max() < N]
        est = float(np.linalg.norm(amp[last[-1]])) if last else float(np.linalg.norm(amp))
    return StaticSolution(field, amp, N, est)
