"""Arithmetic random waves on the 3-torus and their nodal intersections."""

__version__ = "0.1.0"

from .lattice import (
    FrequencySet,
    MeasureOnSphere,
    admissible,
    enumerate_frequencies,
    representable,
    spectral_measure,
    spectral_moments,
)
from .surface import (
    Surface,
    area,
    builtin,
    h_functional,
    interaction_integral,
    is_static,
    oscillatory_integral,
)
from .wave import Wave, covariance, kac_rice_blocks, sample

__all__ = [
    "FrequencySet",
    "MeasureOnSphere",
    "Surface",
    "Wave",
    "admissible",
    "area",
    "builtin",
    "covariance",
    "enumerate_frequencies",
    "h_functional",
    "interaction_integral",
    "is_static",
    "kac_rice_blocks",
    "oscillatory_integral",
    "representable",
    "sample",
    "spectral_measure",
    "spectral_moments",
]
