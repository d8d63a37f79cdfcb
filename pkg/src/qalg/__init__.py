"""Verification engine for quadratic symmetry algebras of 2D superintegrable systems."""

__version__ = "0.1.0"

from .opalgebra import (
    LaurentPoly,
    LinearOperator,
    NCExpr,
    RationalFunc,
    apply,
    commutator,
    compose,
    nc_evaluate,
)

__all__ = [
    "LaurentPoly",
    "LinearOperator",
    "NCExpr",
    "RationalFunc",
    "apply",
    "commutator",
    "compose",
    "nc_evaluate",
    "__version__",
]
