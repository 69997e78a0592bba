"""Numerical toolkit for Lévy processes: exponents, concentration functions,
transition densities and heat-kernel envelope audits."""

from .errors import InvalidInput, LevyError, NumericalFailure
from .measure import GeneratingTriplet, LevyMeasure, SymmetricMatrix, validate_triplet
from .zoo import make_zoo, parse_zoo
from .exponent import CharExponent
from .concentration import ConcentrationFn

__version__ = "0.1.0"

__all__ = [
    "CharExponent",
    "ConcentrationFn",
    "GeneratingTriplet",
    "InvalidInput",
    "LevyError",
    "LevyMeasure",
    "NumericalFailure",
    "SymmetricMatrix",
    "make_zoo",
    "parse_zoo",
    "validate_triplet",
]
