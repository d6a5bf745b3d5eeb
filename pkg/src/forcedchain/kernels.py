"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``FORCEDCHAIN_BACKEND=python`` is set, the numpy
fallback is used. Both expose the same functions.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("FORCEDCHAIN_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

shifted_tridiag_solve = _impl.shifted_tridiag_solve
splitting_chunk = _impl.splitting_chunk


def get_backend(name: str):
    """Return the kernel module named ``"python"`` or ``"cython"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
