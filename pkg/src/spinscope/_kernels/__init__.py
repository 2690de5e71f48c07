"""Hot-loop kernels for the closed-form signals.

The compiled extension ``_ckernels`` is used when it was built; otherwise the
NumPy implementation in :mod:`.pykernels` is used. Setting the environment
variable ``SPINSCOPE_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` names
the active implementation.
"""
import os

from . import pykernels

if os.environ.get("SPINSCOPE_PURE_PYTHON", "") not in ("", "0"):
    _impl = pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = pykernels
        BACKEND = "python"

ramsey_product = _impl.ramsey_product
echo_product = _impl.echo_product
dd_terms = _impl.dd_terms
five_pulse = _impl.five_pulse
filter_ratio = _impl.filter_ratio


def available_backends():
    """Mapping of backend name to kernel module for every importable backend."""
    out = {"python": pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
