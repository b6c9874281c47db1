"""Rigorous and variational bounds on the self-energy of charged particles
coupled to a quantized, ultraviolet-cut radiation field."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapacityError,
    ConfigurationError,
    DegenerateProfileError,
    InvalidInputError,
    NumericalFailure,
    QEDBoundsError,
)
from .lattice import ModeLattice, PhysParams, lattice  # noqa: E402
from .records import BoundRecord, ConstantsSet  # noqa: E402

__all__ = [
    "__version__",
    "BoundRecord",
    "CapacityError",
    "ConfigurationError",
    "ConstantsSet",
    "DegenerateProfileError",
    "InvalidInputError",
    "ModeLattice",
    "NumericalFailure",
    "PhysParams",
    "QEDBoundsError",
    "lattice",
]
