"""Hot kernels with a compiled implementation and a NumPy fallback.

The compiled extension is used when it imports cleanly. Setting the
environment variable ``PHYZZYGAN_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _reference as reference

compiled = None
if os.environ.get("PHYZZYGAN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _compiled as compiled
    except ImportError:
        compiled = None

BACKEND = "compiled" if compiled is not None else "numpy"
_impl = compiled if compiled is not None else reference

conv1d_forward = _impl.conv1d_forward
conv1d_backward = _impl.conv1d_backward
vmd_admm = _impl.vmd_admm

__all__ = ["BACKEND", "compiled", "reference", "conv1d_forward", "conv1d_backward", "vmd_admm"]
