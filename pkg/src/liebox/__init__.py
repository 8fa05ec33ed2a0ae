"""Exact commutator calculus and sub-Riemannian ball-box experiments."""

from .freelie import WordSum, expand_nested
from .ncpoly import NCPoly, is_trivial
from .poly import Poly, PolyMap
from .vfield import VectorFieldSystem, load_model
from .words import pi_coefficient, pi_table

__version__ = "0.1.0"

__all__ = [
    "NCPoly",
    "Poly",
    "PolyMap",
    "VectorFieldSystem",
    "WordSum",
    "expand_nested",
    "is_trivial",
    "load_model",
    "pi_coefficient",
    "pi_table",
    "__version__",
]
