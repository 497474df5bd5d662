"""Indefinite special Lagrangian submanifolds of C_k^m: construction and numerical checks."""

__version__ = "0.1.0"

from . import errors, geometry, generators, graphs, hypersolve, indlinalg, planes, varcheck  # noqa: E402
from ._core import BACKEND  # noqa: E402
from .errors import (  # noqa: E402
    BlowUpError,
    ConvergenceError,
    DegenerateError,
    IndefSLError,
    InvalidInputError,
)
from .indlinalg import HermitianForm, SignatureMetric  # noqa: E402
from .planes import Frame  # noqa: E402
from .graphs import PotentialField  # noqa: E402
from .geometry import Immersion  # noqa: E402

__all__ = [
    "__version__", "BACKEND", "errors", "geometry", "generators", "graphs", "hypersolve",
    "indlinalg", "planes", "varcheck", "BlowUpError", "ConvergenceError", "DegenerateError",
    "IndefSLError", "InvalidInputError", "HermitianForm", "SignatureMetric", "Frame",
    "PotentialField", "Immersion",
]
