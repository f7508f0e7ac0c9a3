"""Exact polyhedral tools for integral ReLU networks and their depth."""

from .errors import (
    CapsExceeded,
    GenericityFailure,
    NewtonDepthError,
    NotAffineProduct,
    NotJoin,
    PreconditionError,
    SchemaError,
)
from .polytope import Polytope, from_points, simplex

__version__ = "0.1.0"

__all__ = [
    "CapsExceeded",
    "GenericityFailure",
    "NewtonDepthError",
    "NotAffineProduct",
    "NotJoin",
    "PreconditionError",
    "Polytope",
    "SchemaError",
    "from_points",
    "simplex",
]
