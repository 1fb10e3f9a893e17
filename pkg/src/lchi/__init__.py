"""Logarithmic derivatives of Dirichlet L-functions at s=1 for prime moduli."""

from .precision import Precision, PrecisionError

__all__ = ["Precision", "PrecisionError"]
__version__ = "0.1.0"
