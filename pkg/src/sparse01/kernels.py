"""Backend selection for the extension-counting kernels.

The compiled module is used when it imports; ``SPARSE01_PURE=1`` forces
the pure-Python twin.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("SPARSE01_PURE") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py

count_batch = _impl.count_batch
list_extensions = _impl.list_extensions

__all__ = ["BACKEND", "count_batch", "list_extensions"]
