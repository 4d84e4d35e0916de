"""memheat: kernel profiles, mild solutions and L^p decay-rate verification
for heat equations with a memory (Caputo-type) time derivative and fractional
diffusion in small dimensions.
"""
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    MemheatError,
    OutOfScopeError,
    QuadratureError,
    TruncationError,
    UnsupportedOrderError,
)
from .special import MlParams, bessel_j, gamma_fn, mittag_leffler, backend_name

__version__ = "0.1.0"

__all__ = [
    "MlParams",
    "mittag_leffler",
    "gamma_fn",
    "bessel_j",
    "backend_name",
    "MemheatError",
    "DomainError",
    "UnsupportedOrderError",
    "OutOfScopeError",
    "ConvergenceError",
    "QuadratureError",
    "TruncationError",
    "ConfigError",
]
