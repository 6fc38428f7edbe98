"""Shared fixtures: pipelines are expensive, so they are built once per session."""
import warnings

import numpy as np
import pytest

from plasmodes.geometry import make_sphere
from plasmodes.material import DrudeMaterial
from plasmodes.pipeline import build_mesh, build_pipeline


@pytest.fixture(scope="session")
def sphere_pipeline():
    """Unit sphere, refinement 3, default grid and material, delta = 0.1."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return build_pipeline(build_mesh("sphere", 3), DrudeMaterial(), 0.1, 60, 35, 0.15)


@pytest.fixture(scope="session")
def small_pipeline():
    """Coarse sphere for fast plumbing tests."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return build_pipeline(make_sphere(1.0, 2), DrudeMaterial(), 0.1, 30, 12, 0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
