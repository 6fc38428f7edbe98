"""Scikit-learn style wrapper around the modal pipeline.

Samples are incident fields tabulated on the fitted volume grid, flattened
to ``3 P`` columns in point-major order (``Ex, Ey, Ez`` of point 0, then
point 1, ...).  ``transform`` projects onto the first ``n_components`` volume
modes, ``inverse_transform`` synthesises a field from modal coefficients and
``predict`` returns the total interior field at frequency ``omega``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .material import DrudeMaterial
from .pipeline import build_mesh, build_pipeline

__all__ = ["PlasmonicModalExpansion"]


class PlasmonicModalExpansion(TransformerMixin, BaseEstimator):
    """Modal expansion of the interior field of a small plasmonic particle.

    Parameters
    ----------
    shape : {"sphere", "ellipsoid"}
        Reference geometry.
    refinement : int
        Surface mesh refinement level.
    semi_axes : tuple of float
        Ellipsoid semi-axes in units of the particle size.
    delta : float
        Particle size.
    omega : float
        Real frequency used by :meth:`predict`.
    n_components : int
        Number of modes ``N`` kept by ``transform`` and ``predict``.
    n_surface : int
        Surface eigenpairs computed before lifting to volume modes.
    n_modes : int
        Volume modes carried by the perturbation coefficients.
    grid_h : float
        Voxel spacing of the volume grid.
    omega_p, T, eps_m : float
        Drude parameters and background permittivity.
    denominators : {"pole", "omega"}
        Evaluation of the perturbed eigenvalues in :meth:`predict`.

    Attributes
    ----------
    pipeline_ : Pipeline
    model_ : ModalModel
    grid_points_ : (P, 3) ndarray
    gamma_ : (n_components,) ndarray
        Static operator eigenvalues.
    poles_ : (n_components,) complex ndarray
        Dynamic poles on the positive branch.
    """

    def __init__(self, shape="sphere", refinement=3, semi_axes=(1.0, 1.0, 1.0), delta=0.1, omega=0.5,
                 n_components=15, n_surface=60, n_modes=35, grid_h=0.15, omega_p=1.0, T=10.0, eps_m=1.0,
                 denominators="pole"):
        self.shape = shape
        self.refinement = refinement
        self.semi_axes = semi_axes
        self.delta = delta
        self.omega = omega
        self.n_components = n_components
        self.n_surface = n_surface
        self.n_modes = n_modes
        self.grid_h = grid_h
        self.omega_p = omega_p
        self.T = T
        self.eps_m = eps_m
        self.denominators = denominators

    def fit(self, X=None, y=None):
        """Assemble operators, solve the spectrum and locate the poles.

        ``X`` may be a :class:`SurfaceMesh` replacing the built-in shape;
        any other value is ignored.
        """
        if not 0 < self.n_components <= self.n_modes:
            raise ValueError("n_components must lie in [1, n_modes]")
        from .geometry import SurfaceMesh
        mesh = X if isinstance(X, SurfaceMesh) else build_mesh(self.shape, self.refinement, self.semi_axes)
        mat = DrudeMaterial(omega_p=self.omega_p, T=self.T, eps_m=self.eps_m)
        self.pipeline_ = build_pipeline(mesh, mat, self.delta, self.n_surface, self.n_modes, self.grid_h)
        self.model_ = self.pipeline_.model
        self.n_components_ = min(self.n_components, self.model_.n_modes)
        self.grid_points_ = self.model_.basis.grid.points
        self.gamma_ = self.model_.basis.w_gamma[:self.n_components_].copy()
        self.poles_ = np.array([self.model_.pole(n).omega for n in range(self.n_components_)])
        self.n_features_in_ = 3 * len(self.grid_points_)
        return self

    def _samples(self, X, width):
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[None]
        if X.ndim != 2 or X.shape[1] != width:
            raise ValueError(f"expected samples with {width} columns, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("samples contain NaN or infinity")
        return X

    def transform(self, X):
        """Volume projections ``c_n = <E, e_n>``, shape ``(n_samples, n_components)``."""
        check_is_fitted(self, "model_")
        X = self._samples(X, self.n_features_in_)
        grid = self.model_.basis.grid
        E = X.reshape(len(X), -1, 3)
        modes = self.model_.basis.modes[:, :, :self.n_components_]
        return np.einsum("p,spk,pkn->sn", grid.weights, E, modes)

    def inverse_transform(self, C):
        """Field ``sum_n c_n e_n`` on the grid, flattened."""
        check_is_fitted(self, "model_")
        C = self._samples(C, self.n_components_)
        modes = self.model_.basis.modes[:, :, :self.n_components_]
        return np.einsum("sn,pkn->spk", C, modes).reshape(len(C), -1)

    def predict(self, X):
        """Total interior field ``sum_n gamma / (gamma - gamma_n) c_n e_n`` at ``omega``."""
        C = self.transform(X)
        g, den = self.model_.denominators(self.omega, self.n_components_, self.denominators)
        return self.inverse_transform(C * (g / den)[None])
