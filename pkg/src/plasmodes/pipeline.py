"""Assembly of the full modal pipeline from a handful of parameters."""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .fields import ModalModel
from .geometry import SurfaceMesh, check_strict_convexity, make_ellipsoid, make_sphere, voxel_grid
from .material import DrudeMaterial
from .perturbation import PerturbationCoefficients, mode_coefficients
from .potentials import LayerMatrices, assemble_layer_matrices, calderon_residual, symmetrized_pencil
from .spectrum import SpectralBasis, build_volume_modes, solve_spectrum

__all__ = ["Pipeline", "build_mesh", "build_pipeline"]


@dataclass(eq=False)
class Pipeline:
    """Products of one pipeline run."""

    mesh: SurfaceMesh
    layers: LayerMatrices
    basis: SpectralBasis
    coeffs: PerturbationCoefficients
    model: ModalModel
    timings: dict = field(default_factory=dict)

    @property
    def calderon(self) -> float:
        return calderon_residual(self.layers)


def build_mesh(shape: str = "sphere", refinement: int = 3, semi_axes=(1.0, 1.0, 1.0), mesh_file=None) -> SurfaceMesh:
    """Reference-frame mesh; raises :class:`GeometryError` for non-convex input."""
    if mesh_file is not None:
        from .geometry import read_off, read_stl
        mesh = read_stl(mesh_file) if str(mesh_file).lower().endswith(".stl") else read_off(mesh_file)
    elif shape == "sphere":
        mesh = make_sphere(1.0, refinement)
    elif shape == "ellipsoid":
        mesh = make_ellipsoid(semi_axes, refinement)
    else:
        raise GeometryError(f"unknown shape {shape!r}")
    rep = check_strict_convexity(mesh)
    if not rep:
        raise GeometryError(rep.summary())
    return mesh


def build_pipeline(mesh: SurfaceMesh, mat: DrudeMaterial | None = None, delta: float = 0.1,
                   n_surface: int = 60, n_modes: int = 35, h: float = 0.15) -> Pipeline:
    """Layer operators, spectrum, volume modes, perturbation coefficients and the modal model."""
    mat = DrudeMaterial() if mat is None else mat
    tm = {}
    t0 = time.perf_counter()
    layers = assemble_layer_matrices(mesh)
    A, M = symmetrized_pencil(layers)
    basis = solve_spectrum(A, M, n_surface, mesh)
    tm["spectrum"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        basis = build_volume_modes(basis, voxel_grid(mesh, h))
    coeffs = mode_coefficients(basis, n_modes)
    tm["modes"] = time.perf_counter() - t0
    model = ModalModel(coeffs, mat, delta, M)
    return Pipeline(mesh, layers, coeffs.basis, coeffs, model, tm)
