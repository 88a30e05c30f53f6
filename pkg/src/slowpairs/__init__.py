"""Correlated photon pairs from slow-light waveguides through a gated detection chain."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
