"""Exact norm calculators for Jamesified and Tsirelson-type sequence spaces,
utc sums, a finite-stage Bourgain-Delbaen model and diagonal operator algebras."""
from __future__ import annotations

from .core import (
    EQ_TOL, EXACT, FLOAT, INEQ_TOL, BanachforgeError, CapError, Coeffs, ConstructionError, ModelError, NormOracle,
    OracleDefectError, OrderingError, ParseError, PoolError, SpecError, default_mode, lp,
)
from .spaces import parse_space

__version__ = "0.1.0"

__all__ = [
    "EQ_TOL", "EXACT", "FLOAT", "INEQ_TOL", "BanachforgeError", "CapError", "Coeffs", "ConstructionError",
    "ModelError", "NormOracle", "OracleDefectError", "OrderingError", "ParseError", "PoolError", "SpecError",
    "default_mode", "lp", "parse_space", "__version__",
]
