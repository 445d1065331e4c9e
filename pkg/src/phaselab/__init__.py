"""Phase-space Bell inequalities and marginal-problem reconstruction toolkit."""

from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
