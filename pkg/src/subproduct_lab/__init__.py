"""Finite-dimensional subproduct systems, their Fock spaces and Toeplitz operators."""

__version__ = "0.1.0"

from .systems import (  # noqa: E402
    FaithfulnessError,
    SubproductSystem,
    build_product,
    build_quiver,
    build_subshift,
    build_symmetric,
    build_system,
    validate_system,
)
from .fock import TruncatedFock, FockOperator, gauge_conjugate, spectral_component, fejer  # noqa: E402
from .ideal import decay_scan, cp_seminorm, sphere_compare, generated_by_Qn_check  # noqa: E402

__all__ = [
    "FaithfulnessError",
    "SubproductSystem",
    "build_product",
    "build_quiver",
    "build_subshift",
    "build_symmetric",
    "build_system",
    "validate_system",
    "TruncatedFock",
    "FockOperator",
    "gauge_conjugate",
    "spectral_component",
    "fejer",
    "decay_scan",
    "cp_seminorm",
    "sphere_compare",
    "generated_by_Qn_check",
]
