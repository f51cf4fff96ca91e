"""Pick the compiled kernels when available, the numpy fallback otherwise.

Set ``VSFIELD_BACKEND=python`` to force the fallback (useful for benchmarks and
for checking that both paths agree).
"""
import os
import warnings

from . import _fallback

kernels = _fallback
NAME = "python"

if os.environ.get("VSFIELD_BACKEND", "").strip().lower() not in ("python", "numpy", "fallback"):
    try:
        from . import _kernels as kernels  # noqa: F811

        NAME = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        if os.environ.get("VSFIELD_BACKEND", "").strip().lower() == "cython":
            warnings.warn("VSFIELD_BACKEND=cython requested but the extension is not built")
        kernels = _fallback
        NAME = "python"


def compiled():
    """The compiled kernel module, or ``None`` if the extension is not built."""
    try:
        from . import _kernels
    except ImportError:  # pragma: no cover
        return None
    return _kernels
