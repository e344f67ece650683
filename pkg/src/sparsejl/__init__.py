"""Sparse Johnson-Lindenstrauss embeddings with dimension-aware sparsity."""

from .kernels import BACKEND
from .sketch import FORMAT_VERSION, SparseJLMatrix
from .vectors import Dataset, SparseVector

__version__ = "0.1.0"

__all__ = ["BACKEND", "FORMAT_VERSION", "Dataset", "SparseJLMatrix", "SparseVector", "__version__"]
