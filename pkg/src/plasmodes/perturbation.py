"""Low-frequency expansion of the volume operator.

For ``k = omega * delta / c`` the operator on the reference body expands as

    T^k = T^0 + k^2 T2 + i k^3 T3 + O(k^4),

with (derived from the dyadic kernel, checked against the dense k-expansion
oracle in :mod:`plasmodes.oracle`)

    T2[f](x) = -(1 / 8 pi) int_B (I + r r^T / |r|^2) f(y) / |r| dy,   r = x - y,
    T3[f]    = -(1 / 6 pi) int_B f(y) dy                (constant in x).

Per mode ``alpha_n = <T2 e_n, e_n>`` and ``beta_n = <T3 e_n, e_n>`` give
``gamma_n(k) = gamma_n + k^2 alpha_n + i k^3 beta_n``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import eigsh

from .geometry import VolumeGrid
from .spectrum import SpectralBasis

__all__ = [
    "PerturbationCoefficients",
    "assemble_T2_matrix",
    "apply_T2",
    "apply_T3",
    "mode_coefficients",
    "perturbed_eigenvalue",
    "perturbed_eigenvector",
]


def _ball_radius(w):
    return (3.0 * np.asarray(w) / (4.0 * np.pi)) ** (1.0 / 3.0)


def assemble_T2_matrix(grid: VolumeGrid) -> np.ndarray:
    """Dense ``(3P, 3P)`` matrix of T2 in point-major layout.

    Off-diagonal blocks use the cell-centre rule; the self cell is replaced
    by a ball of equal volume, whose exact integral is ``-(a^2 / 3) I``.
    """
    X, w = grid.points, grid.weights
    P = len(X)
    D = X[:, None, :] - X[None, :, :]
    r = np.linalg.norm(D, axis=2)
    np.fill_diagonal(r, 1.0)
    rh = D / r[..., None]
    K = (np.eye(3)[None, None] + rh[..., :, None] * rh[..., None, :]) * (-(w[None, :] / (8.0 * np.pi * r)))[..., None, None]
    a = _ball_radius(w)
    K[np.arange(P), np.arange(P)] = (-(a ** 2) / 3.0)[:, None, None] * np.eye(3)
    return K.transpose(0, 2, 1, 3).reshape(3 * P, 3 * P)


def apply_T2(grid: VolumeGrid, field, matrix=None):
    """Apply T2 to a field ``(P, 3, ...)`` sampled on the grid."""
    f = np.asarray(field)
    Kmat = assemble_T2_matrix(grid) if matrix is None else matrix
    P = grid.size
    flat = f.reshape(3 * P, -1)
    return (Kmat @ flat).reshape(f.shape)


def apply_T3(grid: VolumeGrid, field):
    """Apply T3: the constant field ``-(1/6 pi) int f``."""
    f = np.asarray(field)
    mean = np.einsum("p,pk...->k...", grid.weights, f) * (-1.0 / (6.0 * np.pi))
    return np.broadcast_to(mean, f.shape).copy()


@dataclass(frozen=True, eq=False)
class PerturbationCoefficients:
    """Per-mode expansion coefficients.

    Attributes
    ----------
    gamma, alpha, beta : (N,) ndarray
        Static eigenvalue and the k^2 and i k^3 coefficients.
    eta : (N,) ndarray
        Validity radius in ``k``: ``sqrt(d_n / max(C_B, 1))`` with ``C_B`` the
        discrete norm of T2.
    gram2 : (N, N) ndarray
        ``<T2 e_m, e_n>``.
    moments : (3, N) ndarray
        ``int e_n``, so that ``<T3 e_m, e_n> = -(1/6 pi) moments_m . moments_n``.
    basis : SpectralBasis
        Basis used (intra-cluster rotations applied when degenerate
        perturbation theory is enabled).
    norm_T2 : float
    """

    gamma: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    eta: np.ndarray
    gram2: np.ndarray
    moments: np.ndarray
    basis: SpectralBasis
    norm_T2: float

    @property
    def n_modes(self) -> int:
        return self.gamma.size

    def table(self):
        """Rows ``(n, gamma_n, alpha_n, beta_n, eta_n)`` with 1-based ``n``."""
        return [(i + 1, self.gamma[i], self.alpha[i], self.beta[i], self.eta[i]) for i in range(self.n_modes)]


def _weighted_norm(grid, Kmat):
    sw = np.repeat(np.sqrt(grid.weights), 3)
    S = sw[:, None] * Kmat / sw[None, :]
    S = 0.5 * (S + S.T)
    ev = eigsh(S, k=1, which="LM", return_eigenvectors=False, tol=1e-6)
    return float(np.abs(ev[0]))


def mode_coefficients(basis: SpectralBasis, n_modes: int | None = None, degenerate: bool = True,
                      matrix=None) -> PerturbationCoefficients:
    """Compute ``alpha_n`` and ``beta_n`` for the leading volume modes.

    With ``degenerate=True`` the T2 Gram matrix is diagonalised inside every
    degenerate cluster and the modes are rotated accordingly.
    """
    grid = basis.grid
    N = basis.n_modes if n_modes is None else min(int(n_modes), basis.n_modes)
    Kmat = assemble_T2_matrix(grid) if matrix is None else matrix
    E = basis.modes[:, :, :N]
    TE = apply_T2(grid, E, Kmat)
    G2 = np.einsum("p,pkn,pkm->nm", grid.weights, E, TE).real
    G2 = 0.5 * (G2 + G2.T)
    if degenerate:
        rot = {}
        for cl in basis.w_clusters():
            cl = cl[cl < N]
            if cl.size > 1:
                _, Q = np.linalg.eigh(G2[np.ix_(cl, cl)])
                rot[tuple(cl.tolist())] = Q
        if rot:
            basis = basis.rotated(rot)
            E = basis.modes[:, :, :N]
            TE = apply_T2(grid, E, Kmat)
            G2 = np.einsum("p,pkn,pkm->nm", grid.weights, E, TE).real
            G2 = 0.5 * (G2 + G2.T)
    mom = np.einsum("p,pkn->kn", grid.weights, E)
    beta = -np.einsum("kn,kn->n", mom, mom) / (6.0 * np.pi)
    cb = _weighted_norm(grid, Kmat)
    d = basis.w_isolation[:N]
    eta = np.sqrt(d / max(cb, 1.0))
    return PerturbationCoefficients(basis.w_gamma[:N].copy(), np.diag(G2).copy(), beta, eta, G2, mom,
                                    basis, cb)


def perturbed_eigenvalue(coeffs: PerturbationCoefficients, n: int, k):
    """``gamma_n(k) = gamma_n + k^2 alpha_n + i k^3 beta_n`` (0-based ``n``).

    A ``RuntimeWarning`` is emitted when ``|k|`` exceeds the validity radius.
    """
    k = np.asarray(k)
    if np.any(np.abs(k) > coeffs.eta[n]):
        warnings.warn(f"|k| beyond validity radius {coeffs.eta[n]:.3g} for mode {n}", RuntimeWarning,
                      stacklevel=2)
    return coeffs.gamma[n] + k ** 2 * coeffs.alpha[n] + 1j * k ** 3 * coeffs.beta[n]


def perturbed_eigenvector(coeffs: PerturbationCoefficients, n: int, k, cluster_tol=None):
    """First-order eigenvector correction coefficients.

    Returns
    -------
    dict
        ``{"coefficients": (N,) complex, "excluded": indices}`` where entry
        ``j`` is ``k^2 <T2 e_n, e_j> / (gamma_n - gamma_j)`` and members of
        the degenerate cluster of ``n`` (including ``n``) are set to zero.
    """
    g = coeffs.gamma
    tol = coeffs.basis.cluster_tol if cluster_tol is None else cluster_tol
    excl = np.where(np.abs(g - g[n]) <= tol)[0]
    out = np.zeros(g.size, complex)
    mask = np.ones(g.size, bool)
    mask[excl] = False
    out[mask] = k ** 2 * coeffs.gram2[n, mask] / (g[n] - g[mask])
    return {"coefficients": out, "excluded": excl}
