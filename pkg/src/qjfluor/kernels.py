"""Kernel dispatch.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy versions in ``_fallback`` are used. Set ``QJFLUOR_PURE_PYTHON=1`` to
force the fallback (useful for benchmarking and for checking that both
backends agree).
"""

import os

from . import _fallback

BACKEND = "python"

if os.environ.get("QJFLUOR_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

gate_on_grid = _impl.gate_on_grid
bright_time_in_bins = _impl.bright_time_in_bins
single_pole = _impl.single_pole
hysteresis = _impl.hysteresis
add_gated_tone = _impl.add_gated_tone
mix_boxcar = _impl.mix_boxcar

__all__ = [
    "BACKEND",
    "gate_on_grid",
    "bright_time_in_bins",
    "single_pole",
    "hysteresis",
    "add_gated_tone",
    "mix_boxcar",
]
