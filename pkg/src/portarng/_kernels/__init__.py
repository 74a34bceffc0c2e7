"""Kernel implementation selection.

The hot generation loops live in a compiled Cython core with a numpy
fallback. The core is preferred when importable; PORTARNG_KERNELS=core or
=fallback forces one side (core raises if the extension is missing).
"""

import os

_choice = os.environ.get("PORTARNG_KERNELS", "auto")
if _choice not in ("auto", "core", "fallback"):
    raise ValueError(f"PORTARNG_KERNELS must be auto, core or fallback, got {_choice!r}")

if _choice == "fallback":
    from . import _fallback as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "core":
            raise
        from . import _fallback as _impl

IMPL = _impl.IMPL
philox_fill = _impl.philox_fill
mrg_fill = _impl.mrg_fill
box_muller = _impl.box_muller
