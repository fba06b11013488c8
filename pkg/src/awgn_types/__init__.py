"""Reliability exponents and method-of-types tooling for the AWGN channel."""

from .errors import (
    AwgnTypesError,
    BracketError,
    CeilingError,
    ConstraintViolation,
    DomainError,
    HypothesisViolation,
    InfeasibleError,
    NumericalError,
    QuadratureError,
)
from .exponents import (
    capacity,
    correct_decoding_exponent,
    error_exponent,
    parametric_curve,
    rho_of_rate,
    shannon_sphere_packing,
)
from .gauss_family import ChannelSpec, make_rho_point

__version__ = "0.1.0"

__all__ = [
    "AwgnTypesError",
    "BracketError",
    "CeilingError",
    "ChannelSpec",
    "ConstraintViolation",
    "DomainError",
    "HypothesisViolation",
    "InfeasibleError",
    "NumericalError",
    "QuadratureError",
    "capacity",
    "correct_decoding_exponent",
    "error_exponent",
    "make_rho_point",
    "parametric_curve",
    "rho_of_rate",
    "shannon_sphere_packing",
    "__version__",
]
