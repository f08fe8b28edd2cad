"""Exact tractor calculus for almost Grassmannian structures of type (2,n)."""

__version__ = "0.1.0"

from .poly import Poly  # noqa: E402
from .tensor import IndexedTensor, Slot  # noqa: E402

__all__ = ["Poly", "IndexedTensor", "Slot", "__version__"]
