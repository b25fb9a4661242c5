"""Decoherence of nuclear-spin registers: pulse sequences, density matrices, partial traces."""

from ._kernels import BACKEND
from .core import DensityMatrix, Kind, partial_trace
from .nmr import SpinSystem, load_system

__version__ = "0.1.0"

__all__ = ["BACKEND", "DensityMatrix", "Kind", "SpinSystem", "load_system", "partial_trace"]
