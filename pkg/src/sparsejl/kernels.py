"""Backend selection for the hot kernels.

The compiled extension ``sparsejl._kernels`` is used when it imports;
otherwise the numpy fallback in ``sparsejl._kernels_py`` is used. Set
``SPARSEJL_PURE=1`` to force the fallback. Both backends agree bit for bit
on sampling and on embedding outputs.
"""

import os
from types import ModuleType

from . import _kernels_py

_EXPORTS = ("sample_columns", "derive_seed", "scatter_csr", "scatter_dense", "pair_sq_dists", "mix64")


def _load_compiled():
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels


def load_backend(name: str = "auto") -> ModuleType:
    """Return the kernel module for ``name`` in {"auto", "compiled", "python"}."""
    if name == "python":
        return _kernels_py
    compiled = _load_compiled()
    if name == "compiled":
        if compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return compiled
    if name != "auto":
        raise ValueError(f"unknown backend {name!r}")
    if os.environ.get("SPARSEJL_PURE") == "1" or compiled is None:
        return _kernels_py
    return compiled


_backend = load_backend()
BACKEND = "compiled" if _backend is not _kernels_py else "python"

sample_columns = _backend.sample_columns
derive_seed = _backend.derive_seed
scatter_csr = _backend.scatter_csr
scatter_dense = _backend.scatter_dense
pair_sq_dists = _backend.pair_sq_dists
mix64 = _backend.mix64

__all__ = ["BACKEND", "load_backend", *_EXPORTS]
