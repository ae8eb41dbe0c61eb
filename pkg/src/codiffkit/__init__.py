"""Codifferential calculus for piecewise-smooth functions on R^d."""
from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
