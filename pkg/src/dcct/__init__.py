"""Dual clustering co-teaching (DCCT) on synthetic re-identification-style data."""
from .config import RunConfig
from .kernels import BACKEND

__all__ = ["RunConfig", "BACKEND", "__version__"]
__version__ = "0.1.0"
