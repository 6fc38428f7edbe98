"""Independent reference computations.

* analytic Neumann-Poincare spectrum of the sphere from spherical harmonics;
* dense collocation of the volume operator ``T^k`` on voxel grids (discrete
  dipole style), used for k-expansion checks;
* a face-charge Galerkin discretisation of ``T^0`` on a tetrahedral mesh and
  the dense Lippmann-Schwinger solve ``(gamma I - T^k) E = gamma E_in``;
* the exact quasi-static field inside a sphere excited by a point dipole.

Volume operator convention (reference frame, ``G^k = -e^{ikr} / (4 pi r)``):

    T^k[f] = k^2 int G^k f + grad div int G^k f,

so that ``T^0`` is the identity on gradients of H^1_0 functions, zero on
divergence-free fields and ``gamma_n`` on the plasmonic modes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.spatial import Delaunay
from scipy.special import eval_legendre

from .errors import ConditioningError, ConfigurationError, FeasibilityError
from .geometry import SurfaceMesh, VolumeGrid
from .material import DrudeMaterial, contrast
from .potentials import TEST_RULE, boundary_distance, triangle_potentials

__all__ = [
    "sphere_np_spectrum",
    "DenseVolumeOperator",
    "TetGrid",
    "assemble_dense_T",
    "tetrahedral_grid",
    "assemble_tet_T",
    "dense_ls_solve",
    "KExpansionFit",
    "k_expansion_fit",
    "rayleigh_eigenvalues",
    "sphere_static_field",
    "clausius_mossotti",
    "induced_dipole",
]

FOUR_PI = 4.0 * np.pi
MAX_DENSE_POINTS = 4000


# ----------------------------------------------------------------- sphere

def sphere_np_spectrum(n_max: int):
    """Neumann-Poincare eigenvalues of the unit sphere for ``l = 0..n_max``.

    On the unit sphere ``int Y_l(y) / (4 pi |x - y|) dS(y)`` equals
    ``r^l Y_l / (2l+1)`` inside and ``r^-(l+1) Y_l / (2l+1)`` outside, so
    ``S[Y_l]`` (kernel ``-1/(4 pi r)``) has radial profile ``-r^l / (2l+1)``
    and ``-r^-(l+1) / (2l+1)``.  The jump relations
    ``d S[phi] / d nu |_(+/-) = (+/- 1/2 + K*) phi`` then give ``K*`` from
    either side; both values are computed and must agree.

    Returns
    -------
    lam : (n_max + 1,) ndarray
    mult : (n_max + 1,) ndarray of int
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    l = np.arange(n_max + 1, dtype=float)
    s = -1.0 / (2.0 * l + 1.0)
    d_out = -(l + 1.0) * s      # d/dr of s r^-(l+1) at r = 1
    d_in = l * s                # d/dr of s r^l at r = 1
    lam_out = d_out - 0.5
    lam_in = d_in + 0.5
    if not np.allclose(lam_out, lam_in, rtol=0, atol=1e-15):
        raise AssertionError("interior and exterior jump relations disagree")
    return lam_out, (2 * l + 1).astype(int)


# ----------------------------------------------------------------- voxel operator

@dataclass(frozen=True, eq=False)
class DenseVolumeOperator:
    """Dense discretisation of ``T^k``.

    Attributes
    ----------
    matrix : (3P, 3P) ndarray
        Point-major layout; ``(T f)_i = sum_j matrix[3i:3i+3, 3j:3j+3] f_j``
        for collocation, or the Galerkin matrix when ``galerkin`` is set.
    points, weights : ndarray
        Collocation points and cell volumes.
    k : complex
    galerkin : bool
        When true the discrete system is ``(gamma W - matrix) E = gamma W E_in``
        with ``W = diag(weights)``; otherwise ``(gamma I - matrix) E = gamma E_in``.
    """

    matrix: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    k: complex
    galerkin: bool = False
    params: dict = None

    @property
    def size(self) -> int:
        return len(self.points)

    def symmetrized(self) -> np.ndarray:
        """``W^(1/2) T W^(-1/2)`` (collocation) or ``W^(-1/2) G W^(-1/2)`` (Galerkin)."""
        sw = np.repeat(np.sqrt(self.weights), 3)
        if self.galerkin:
            return self.matrix / sw[:, None] / sw[None, :]
        return sw[:, None] * self.matrix / sw[None, :]


def _kernel_block(X, Y, w, k):
    # -e^{ikr}/(4 pi r) [(k^2 + (ikr-1)/r^2) I + (3 - 3ikr - k^2 r^2)/r^2 rr^T] w_y
    D = X[:, None, :] - Y[None, :, :]
    r = np.linalg.norm(D, axis=2)
    zero = r == 0
    r = np.where(zero, 1.0, r)
    rh = D / r[..., None]
    ikr = 1j * k * r
    a = k * k + (ikr - 1.0) / r ** 2
    b = (3.0 - 3.0 * ikr - (k * r) ** 2) / r ** 2
    g = -np.exp(ikr) / (FOUR_PI * r) * w[None, :]
    g = np.where(zero, 0.0, g)
    K = (g * a)[..., None, None] * np.eye(3) + (g * b)[..., None, None] * rh[..., :, None] * rh[..., None, :]
    return K


def _self_term(w, k):
    a = (3.0 * w / FOUR_PI) ** (1.0 / 3.0)
    if k == 0:
        return np.full(w.shape, 1.0 / 3.0, complex)
    ika = 1j * k * a
    return 1.0 / 3.0 - (2.0 / 3.0) * ((1.0 - ika) * np.exp(ika) - 1.0)


def _assemble_collocation(X, w, k, block=256):
    P = len(X)
    k = complex(k)
    T = np.zeros((3 * P, 3 * P), complex)
    sv = _self_term(w, k)
    for i0 in range(0, P, block):
        i1 = min(P, i0 + block)
        K = _kernel_block(X[i0:i1], X, w, k)
        idx = np.arange(i0, i1)
        K[idx - i0, idx] = sv[idx, None, None] * np.eye(3)
        T[3 * i0:3 * i1] = K.transpose(0, 2, 1, 3).reshape(3 * (i1 - i0), 3 * P)
    return T


def assemble_dense_T(grid: VolumeGrid, k=0.0, max_points: int = MAX_DENSE_POINTS) -> DenseVolumeOperator:
    """Collocation matrix of ``T^k`` on a voxel grid.

    Off-diagonal blocks use the point kernel times the cell volume; the self
    cell is replaced by the ball of equal volume (radius ``a``), whose exact
    integral is ``(1/3 - (2/3)((1 - ika) e^{ika} - 1)) I``; at ``k = 0`` this is
    the depolarisation value ``I / 3``.

    Raises
    ------
    FeasibilityError
        If the grid has more than ``max_points`` points.
    """
    if grid.size > max_points:
        raise FeasibilityError(f"dense assembly capped at {max_points} points (grid has {grid.size})")
    T = _assemble_collocation(grid.points, grid.weights, k)
    if complex(k) == 0:
        T = T.real
    return DenseVolumeOperator(T, grid.points, grid.weights, complex(k), False, {"kind": "voxel"})


# ----------------------------------------------------------------- tetrahedral operator

@dataclass(frozen=True, eq=False)
class TetGrid:
    """Tetrahedral mesh of a convex body with piecewise-constant fields."""

    nodes: np.ndarray
    tets: np.ndarray
    volumes: np.ndarray

    @property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.tets].mean(axis=1)

    @property
    def size(self) -> int:
        return len(self.tets)

    def as_volume_grid(self, mesh: SurfaceMesh) -> VolumeGrid:
        c = self.centroids
        return VolumeGrid(c, self.volumes, boundary_distance(mesh, c), float(np.cbrt(self.volumes.mean())))


def tetrahedral_grid(mesh: SurfaceMesh, h: float, seed: int = 0) -> TetGrid:
    """Delaunay tetrahedralisation of the mesh vertices plus interior lattice points.

    Lattice points closer than ``h/2`` to the boundary are dropped and the
    remaining ones jittered by ``0.02 h`` to avoid flat slivers.
    """
    if h <= 0:
        raise ConfigurationError("tet spacing must be positive")
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    mid = 0.5 * (lo + hi)
    m = np.ceil(0.5 * (hi - lo) / h).astype(int) + 1
    axes = [mid[i] + h * np.arange(-m[i], m[i] + 1) for i in range(3)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    X = X[boundary_distance(mesh, X) > 0.5 * h]
    X = X + np.random.default_rng(seed).uniform(-0.02 * h, 0.02 * h, X.shape)
    pts = np.vstack([mesh.vertices, X])
    T = Delaunay(pts).simplices
    P = pts[T]
    vol = np.abs(np.einsum("tk,tk->t", np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), P[:, 3] - P[:, 0])) / 6.0
    keep = vol > 1e-14
    return TetGrid(pts, T[keep], vol[keep])


def _faces(tg: TetGrid):
    loc = [(1, 2, 3, 0), (0, 2, 3, 1), (0, 1, 3, 2), (0, 1, 2, 3)]
    fl, tl, nl = [], [], []
    pts, T = tg.nodes, tg.tets
    for a, b, c, o in loc:
        F = np.sort(T[:, [a, b, c]], axis=1)
        PA, PB, PC, PO = pts[F[:, 0]], pts[F[:, 1]], pts[F[:, 2]], pts[T[:, o]]
        nn = np.cross(PB - PA, PC - PA)
        nn /= np.linalg.norm(nn, axis=1)[:, None]
        nn *= np.sign(np.einsum("tk,tk->t", nn, PA - PO))[:, None]
        fl.append(F)
        tl.append(np.arange(len(T)))
        nl.append(nn)
    F = np.vstack(fl)
    U, inv = np.unique(F, axis=0, return_inverse=True)
    return U, inv.ravel(), np.concatenate(tl), np.vstack(nl)


def assemble_tet_T(tg: TetGrid, k=0.0, block: int = 150, max_cells: int = 2600) -> DenseVolumeOperator:
    """Galerkin matrix of ``T^k`` for piecewise-constant fields on tets.

    For constant ``f`` per tet, ``div f`` is a surface charge
    ``sigma_F = sum_t f_t . n_(t,F)`` on the faces, so
    ``<T^0 f, g> = sum_(F,G) sigma_F(g) W_FG sigma_G(f)`` with
    ``W_FG = int_F int_G 1 / (4 pi |x - y|)`` (inner face integral in closed
    form, outer one by a three-point rule, then symmetrised).  For ``k != 0``
    the difference ``T^k - T^0`` is added with the centroid rule, which is
    smooth apart from the self term.

    Raises
    ------
    FeasibilityError
        If the mesh has more than ``max_cells`` cells.
    """
    nt = tg.size
    if nt > max_cells:
        raise FeasibilityError(f"dense tet assembly capped at {max_cells} cells (mesh has {nt})")
    U, inv, tt, NN = _faces(tg)
    A, B, C = tg.nodes[U[:, 0]], tg.nodes[U[:, 1]], tg.nodes[U[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(B - A, C - A), axis=1)
    nf = len(U)
    rows = np.repeat(inv, 3)
    cols = (3 * tt[:, None] + np.arange(3)).ravel()
    Dm = sp.csr_matrix((NN.ravel(), (rows, cols)), shape=(nf, 3 * nt))
    W = np.zeros((nf, nf))
    for bary, wq in TEST_RULE:
        x = bary[0] * A + bary[1] * B + bary[2] * C
        for i0 in range(0, nf, block):
            W[i0:i0 + block] += wq * triangle_potentials(x[i0:i0 + block], A, B, C, gradient=False) / FOUR_PI
    W = area[:, None] * W
    W = 0.5 * (W + W.T)
    G = np.asarray(Dm.T @ (Dm.T @ W).T)
    G = 0.5 * (G + G.T)
    k = complex(k)
    if k != 0:
        xc, v = tg.centroids, tg.volumes
        dT = _assemble_collocation(xc, v, k) - _assemble_collocation(xc, v, 0.0)
        G = G + np.repeat(v, 3)[:, None] * dT
    return DenseVolumeOperator(G, tg.centroids, tg.volumes.copy(), k, True, {"kind": "tet", "faces": nf})


# ----------------------------------------------------------------- solves

def dense_ls_solve(op: DenseVolumeOperator, gamma: complex, incident) -> np.ndarray:
    """Solve the discrete Lippmann-Schwinger system for the interior field.

    Parameters
    ----------
    op : DenseVolumeOperator
    gamma : complex
        Contrast ``gamma(omega)``.
    incident : (P, 3) array_like
        Incident field at ``op.points``.

    Returns
    -------
    (P, 3) complex ndarray

    Raises
    ------
    ConditioningError
        When LAPACK reports an ill-conditioned system; the message names the
        discrete eigenvalue closest to ``gamma``.
    """
    Ein = np.asarray(incident, complex).reshape(-1)
    n = Ein.size
    if op.galerkin:
        w3 = np.repeat(op.weights, 3)
        lhs = -op.matrix.astype(complex)
        lhs[np.diag_indices(n)] += gamma * w3
        rhs = gamma * w3 * Ein
    else:
        lhs = -op.matrix.astype(complex)
        lhs[np.diag_indices(n)] += gamma
        rhs = gamma * Ein
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        try:
            E = sla.solve(lhs, rhs, overwrite_a=True, check_finite=False)
        except (sla.LinAlgWarning, np.linalg.LinAlgError) as exc:
            ev = sla.eigvals(op.symmetrized())
            near = ev[np.argmin(np.abs(ev - gamma))]
            raise ConditioningError(f"near-singular system; nearest discrete eigenvalue {near:.6g}") from exc
    return E.reshape(-1, 3)


def rayleigh_eigenvalues(op: DenseVolumeOperator, fields) -> np.ndarray:
    """``<T e_n, e_n> / <e_n, e_n>`` for fields ``(P, 3, N)`` sampled at ``op.points``."""
    F = np.asarray(fields)
    P, _, N = F.shape
    flat = F.reshape(3 * P, N)
    w3 = np.repeat(op.weights, 3)
    TF = op.matrix @ flat
    if op.galerkin:
        num = np.einsum("in,in->n", flat, TF)
    else:
        num = np.einsum("i,in,in->n", w3, flat, TF)
    den = np.einsum("i,in,in->n", w3, flat, flat)
    return num / den


@dataclass(frozen=True, eq=False)
class KExpansionFit:
    """Per-entry fit ``T^k ~ c0 + c2 k^2 + i c3 k^3``.

    ``residuals[j]`` is the Frobenius norm of ``T^k - (c0 + c2 k^2 + i c3 k^3)``
    at ``k[j]``, which scales as ``k^4``.
    """

    c0: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    k: np.ndarray
    residuals: np.ndarray

    def __call__(self, k):
        return self.c0 + k ** 2 * self.c2 + 1j * k ** 3 * self.c3


def k_expansion_fit(grid: VolumeGrid, k_list, max_points: int = 1500) -> KExpansionFit:
    """Least-squares fit of assembled ``T^k`` entries against ``k``.

    Real parts are fitted with ``1, k^2, k^4, k^6`` and imaginary parts with
    ``k^3, k^5`` (real coefficients); the higher powers absorb truncation so
    that ``c0, c2, c3`` are not biased by it.  With fewer than six samples
    the nuisance columns are dropped.

    Raises
    ------
    ConfigurationError
        If fewer than four distinct ``k`` values are given or the design
        matrix is ill-conditioned.
    """
    ks = np.unique(np.asarray(k_list, float))
    if ks.size < 4:
        raise ConfigurationError("k_expansion_fit needs at least 4 distinct k values")
    pr = (0, 2, 4, 6) if ks.size >= 6 else (0, 2)
    pi = (3, 5) if ks.size >= 6 else (3,)
    Vr = ks[:, None] ** np.array(pr)
    Vi = ks[:, None] ** np.array(pi)
    sc = np.abs(Vr).max(axis=0)
    if np.linalg.cond(Vr / sc) > 1e12:
        raise ConfigurationError("k values too clustered for a stable fit")
    mats = [assemble_dense_T(grid, k, max_points).matrix for k in ks]
    n = mats[0].shape[0]
    Re = np.stack([np.real(m).ravel() for m in mats])
    Im = np.stack([np.imag(m).ravel() for m in mats])
    cr = np.linalg.lstsq(Vr / sc, Re, rcond=None)[0] / sc[:, None]
    sci = np.abs(Vi).max(axis=0)
    ci = np.linalg.lstsq(Vi / sci, Im, rcond=None)[0] / sci[:, None]
    c0, c2, c3 = cr[0].reshape(n, n), cr[1].reshape(n, n), ci[0].reshape(n, n)
    res = np.array([np.linalg.norm(m - (c0 + k ** 2 * c2 + 1j * k ** 3 * c3)) for m, k in zip(mats, ks)])
    return KExpansionFit(c0, c2, c3, ks, res)


# ----------------------------------------------------------------- sphere references

def _legendre_potential(x, s, l):
    rx = np.linalg.norm(x, axis=-1)
    rs = np.linalg.norm(s, axis=-1)
    c = np.einsum("...k,...k->...", x, s) / np.maximum(rx * rs, 1e-300)
    return rx ** l / rs ** (l + 1) * eval_legendre(l, np.clip(c, -1.0, 1.0))


def _multipole_field(x, s, p, l, step=1e-4):
    # -grad_x (p . grad_s u_l) / (4 pi) by central mixed differences
    out = np.zeros(x.shape)
    I = np.eye(3)
    for i in range(3):
        for j in range(3):
            if p[j] == 0:
                continue
            d = 0.0
            for a, b, sg in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                d = d + sg * _legendre_potential(x + a * step * I[i], s + b * step * I[j], l)
            out[:, i] -= p[j] * d / (4.0 * step * step) / FOUR_PI
    return out


def sphere_static_field(points, s, p, gamma, l_max: int = 40) -> np.ndarray:
    """Exact quasi-static interior field of the unit sphere for a dipole at ``s``.

    The incident field is the static dipole field
    ``(3 r (r.p) - p) / (4 pi |x - s|^3)`` (the ``k -> 0`` limit of
    ``k^2 Gd p``).  Its degree-``l`` interior multipole component is
    amplified by ``gamma / (gamma - l / (2l+1))``, the static response of
    the sphere's ``l``-th eigenspace.
    """
    x = np.atleast_2d(np.asarray(points, float))
    s = np.asarray(s, float)
    p = np.asarray(p, float)
    E = np.zeros(x.shape, complex)
    for l in range(1, l_max + 1):
        E += gamma / (gamma - l / (2.0 * l + 1.0)) * _multipole_field(x, s, p, l)
    return E


def clausius_mossotti(mat: DrudeMaterial, omega, volume: float) -> complex:
    """Quasi-static polarizability ``3 V (eps_c - eps_m) / (eps_c + 2 eps_m)``."""
    ec = mat.permittivity(omega)
    return complex(3.0 * volume * (ec - mat.eps_m) / (ec + 2.0 * mat.eps_m))


def induced_dipole(field, weights, gamma) -> np.ndarray:
    """``int (eps_c/eps_m - 1) E = -(1/gamma) int E``, the induced dipole per unit ``eps_m``."""
    return -np.einsum("p,pk->k", np.asarray(weights), np.asarray(field)) / gamma
