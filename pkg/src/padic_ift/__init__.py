"""Certified local inversion and implicit functions for polynomial maps over Q_p."""

from . import errors
from .errors import *  # noqa: F401,F403
from .linalg import BallSpec, UltraMatrix, UltraVector, invert, iso_check, neumann_inverse, op_norm
from .padic import DEFAULT_PRECISION, PadicScalar, arith, norm, padic
from .poly import Poly, PolyMap, monomial_map

__version__ = "0.1.0"

__all__ = [
    "BallSpec",
    "DEFAULT_PRECISION",
    "PadicScalar",
    "Poly",
    "PolyMap",
    "UltraMatrix",
    "UltraVector",
    "arith",
    "invert",
    "iso_check",
    "monomial_map",
    "neumann_inverse",
    "norm",
    "op_norm",
    "padic",
] + [name for name in dir(errors) if name[0].isupper()]
