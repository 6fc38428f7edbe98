"""Static layer potentials on flat-triangle meshes.

Kernel convention: ``G0(x, y) = -1 / (4 pi |x - y|)``.  With this sign the
single-layer operator ``S`` is negative definite, ``M = -S`` defines the
H* inner product and the Neumann-Poincare operator ``K*`` has the constant
density as eigenvector with eigenvalue 1/2 on closed surfaces.

Panel integrals of ``1/|x-y|`` and of its gradient are evaluated in closed
form (edge logarithms plus the signed solid angle), so every interaction,
including the self panel, is integrated exactly for piecewise-constant
densities.  Test-side integrals are averaged over a three-point rule.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AssemblyQualityError, DomainError
from .geometry import SurfaceMesh

__all__ = [
    "triangle_potentials",
    "LayerMatrices",
    "assemble_layer_matrices",
    "assemble_single_layer",
    "assemble_neumann_poincare",
    "symmetrized_pencil",
    "calderon_residual",
    "eval_single_layer",
    "eval_grad_single_layer",
    "boundary_distance",
    "TEST_RULE",
]

FOUR_PI = 4.0 * np.pi

# barycentric test rule, exact for quadratics on the test panel
TEST_RULE = (
    (np.array([2 / 3, 1 / 6, 1 / 6]), 1 / 3),
    (np.array([1 / 6, 2 / 3, 1 / 6]), 1 / 3),
    (np.array([1 / 6, 1 / 6, 2 / 3]), 1 / 3),
)


def triangle_potentials(x, A, B, C, gradient=True):
    """Integrals of ``1/|x-y|`` over flat triangles and their x-gradients.

    Parameters
    ----------
    x : (P, 3) ndarray
        Evaluation points.
    A, B, C : (T, 3) ndarray
        Triangle corners.
    gradient : bool
        Also return the gradient with respect to ``x``.

    Returns
    -------
    I : (P, T) ndarray
        ``int_T 1/|x-y| dS(y)``.
    grad : (P, T, 3) ndarray, optional
        ``grad_x I``.  On the panel plane the solid-angle term is taken as
        its principal value (zero), which yields the direct value of the
        gradient's tangential part and the average of the two normal limits.
    """
    x = np.atleast_2d(np.asarray(x, float))
    nrm = np.cross(B - A, C - A)
    dbl = np.linalg.norm(nrm, axis=1)
    n = nrm / dbl[:, None]
    V = (A, B, C)
    w = np.einsum("ptk,tk->pt", x[:, None, :] - A[None], n)
    r = [Vi[None] - x[:, None, :] for Vi in V]
    R = [np.linalg.norm(ri, axis=2) for ri in r]
    num = np.einsum("ptk,ptk->pt", r[0], np.cross(r[1], r[2]))
    den = (R[0] * R[1] * R[2]
           + np.einsum("ptk,ptk->pt", r[0], r[1]) * R[2]
           + np.einsum("ptk,ptk->pt", r[0], r[2]) * R[1]
           + np.einsum("ptk,ptk->pt", r[1], r[2]) * R[0])
    omega = 2.0 * np.arctan2(num, den)
    omega = np.where(np.abs(w) < 1e-12 * np.sqrt(dbl)[None], 0.0, omega)
    I = w * omega
    G = n[None] * omega[..., None] if gradient else None
    for i in range(3):
        P1, P2 = V[i], V[(i + 1) % 3]
        L = np.linalg.norm(P2 - P1, axis=1)
        s = (P2 - P1) / L[:, None]
        m = np.cross(s, n)
        s1 = np.einsum("ptk,tk->pt", P1[None] - x[:, None], s)
        s2 = s1 + L[None]
        t = np.einsum("ptk,tk->pt", P1[None] - x[:, None], m)
        R1, R2 = R[i], R[(i + 1) % 3]
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(s1 > 0, np.log((R2 + s2) / (R1 + s1)), np.log((R1 - s1) / (R2 - s2)))
        f = np.nan_to_num(f, nan=0.0, posinf=0.0, neginf=0.0)
        I += t * f
        if gradient:
            G -= m[None] * f[..., None]
    return (I, G) if gradient else I


@dataclass(frozen=True, eq=False)
class LayerMatrices:
    """Discrete layer operators on a mesh.

    Attributes
    ----------
    S : (N, N) ndarray
        Panel-averaged single layer: ``S[i, j]`` is the mean over panel ``i``
        of ``int_{panel j} G0(x, y) dS(y)``.
    Kstar : (N, N) ndarray
        Panel-averaged Neumann-Poincare operator.
    M : (N, N) ndarray
        Symmetric positive definite Gram matrix ``-sym(diag(area) S)`` of the
        H* inner product.
    areas : (N,) ndarray
    """

    S: np.ndarray
    Kstar: np.ndarray
    M: np.ndarray
    areas: np.ndarray

    @property
    def galerkin_S(self) -> np.ndarray:
        return self.areas[:, None] * self.S


def assemble_layer_matrices(mesh: SurfaceMesh, block: int = 200) -> LayerMatrices:
    """Assemble ``S``, ``K*`` and ``M`` in one sweep over panel pairs.

    The diagonal of ``K*`` is fixed by the Gauss identity ``a^T K* = a/2``
    (the constant density is an eigenvector of the adjoint with eigenvalue
    1/2), which absorbs the curvature contribution missed by flat panels.
    """
    A, B, C = mesh.corners
    a = mesh.areas
    n = mesh.normals
    N = mesh.n_panels
    S = np.zeros((N, N))
    K = np.zeros((N, N))
    for bary, wq in TEST_RULE:
        x = bary[0] * A + bary[1] * B + bary[2] * C
        for i0 in range(0, N, block):
            sl = slice(i0, i0 + block)
            I, G = triangle_potentials(x[sl], A, B, C)
            S[sl] -= wq * I / FOUR_PI
            K[sl] -= wq * np.einsum("ptk,pk->pt", G, n[sl]) / FOUR_PI
    np.fill_diagonal(K, 0.0)
    K[np.diag_indices(N)] = (0.5 * a - a @ K) / a
    M = -(a[:, None] * S)
    M = 0.5 * (M + M.T)
    return LayerMatrices(S, K, M, a.copy())


def assemble_single_layer(mesh: SurfaceMesh) -> np.ndarray:
    """Single-layer matrix with kernel ``-1/(4 pi |x-y|)``."""
    return assemble_layer_matrices(mesh).S


def assemble_neumann_poincare(mesh: SurfaceMesh) -> np.ndarray:
    """Neumann-Poincare matrix with kernel ``d G0(x, y) / d nu(x)``."""
    return assemble_layer_matrices(mesh).Kstar


def calderon_residual(layers: LayerMatrices, weighted: bool = True) -> float:
    """Relative Calderon residual ``|M K* - K*^T M| / |M K*|``.

    With ``weighted=False`` the panel-averaged ``S`` is used in place of the
    area-weighted Gram matrix.
    """
    Mx = -layers.galerkin_S if weighted else -layers.S
    SK = Mx @ layers.Kstar
    return float(np.linalg.norm(SK - layers.Kstar.T @ Mx) / np.linalg.norm(SK))


def symmetrized_pencil(layers: LayerMatrices):
    """Symmetric-definite pencil ``(A, M)`` whose eigenvalues approximate K*.

    Returns
    -------
    A : ndarray
        ``(M K* + K*^T M) / 2``.
    M : ndarray
        H* Gram matrix.

    Raises
    ------
    AssemblyQualityError
        If ``M`` is not positive definite.
    """
    M = layers.M
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise AssemblyQualityError("H* Gram matrix is not positive definite; refine the mesh") from exc
    MK = M @ layers.Kstar
    return 0.5 * (MK + MK.T), M


def boundary_distance(mesh: SurfaceMesh, points) -> np.ndarray:
    """Signed distance to the boundary of a convex mesh (positive inside)."""
    n, off = mesh.face_planes()
    return np.min(off[None, :] - np.atleast_2d(points) @ n.T, axis=1)


def eval_single_layer(mesh: SurfaceMesh, density, points, block: int = 100):
    """Evaluate ``S[density]`` at arbitrary points.

    ``density`` may carry trailing axes, e.g. ``(N, m)`` for several densities.
    """
    A, B, C = mesh.corners
    pts = np.atleast_2d(np.asarray(points, float))
    dens = np.asarray(density)
    out = np.zeros((len(pts),) + dens.shape[1:], dtype=np.result_type(dens, float))
    for i0 in range(0, len(pts), block):
        I = triangle_potentials(pts[i0:i0 + block], A, B, C, gradient=False)
        out[i0:i0 + block] = -np.tensordot(I, dens, axes=(1, 0)) / FOUR_PI
    return out


def eval_grad_single_layer(mesh: SurfaceMesh, density, points, near_distance=None,
                           block: int = 100, check_domain: bool = True):
    """Gradient of the single-layer potential at interior points.

    Parameters
    ----------
    density : (N, ...) array_like
        Per-panel densities; trailing axes are carried through.
    points : (P, 3) array_like
    near_distance : float, optional
        Points closer than this to the boundary are flagged (default ``mesh.h``).
    check_domain : bool
        Raise if a point lies outside the closed body.

    Returns
    -------
    field : (P, 3, ...) ndarray
    near : (P,) bool ndarray
        Points within ``near_distance`` of the boundary.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    d = boundary_distance(mesh, pts)
    if check_domain and np.any(d < -1e-12):
        raise DomainError(f"{int(np.sum(d < -1e-12))} points lie outside the body")
    hnear = mesh.h if near_distance is None else near_distance
    near = d < hnear
    if np.any(near):
        warnings.warn(f"{int(near.sum())} points within {hnear:.3g} of the boundary; "
                      "reduced accuracy", RuntimeWarning, stacklevel=2)
    A, B, C = mesh.corners
    dens = np.asarray(density)
    out = np.zeros((len(pts), 3) + dens.shape[1:], dtype=np.result_type(dens, float))
    for i0 in range(0, len(pts), block):
        _, G = triangle_potentials(pts[i0:i0 + block], A, B, C)
        out[i0:i0 + block] = -np.tensordot(G, dens, axes=(1, 0)) / FOUR_PI
    return out, near
