"""Hot image kernels with two interchangeable backends.

The default backend is numba-jitted; set PHENOSCALE_BACKEND=numpy to force
the pure-numpy fallback (used automatically when numba is not importable).
Both backends produce bit-identical results; see benchmarks/bench_kernels.py
for a speed comparison.
"""

import os

from ..errors import ConfigError

_choice = os.environ.get("PHENOSCALE_BACKEND", "auto").strip().lower()

if _choice in ("", "auto"):
    try:
        from ._numba import (
            binary_dilate,
            binary_erode,
            convolve2d_u8,
            label_components,
            resize_cubic_u8,
        )

        BACKEND = "numba"
    except ImportError:
        from ._numpy import (
            binary_dilate,
            binary_erode,
            convolve2d_u8,
            label_components,
            resize_cubic_u8,
        )

        BACKEND = "numpy"
elif _choice == "numba":
    from ._numba import (
        binary_dilate,
        binary_erode,
        convolve2d_u8,
        label_components,
        resize_cubic_u8,
    )

    BACKEND = "numba"
elif _choice == "numpy":
    from ._numpy import (
        binary_dilate,
        binary_erode,
        convolve2d_u8,
        label_components,
        resize_cubic_u8,
    )

    BACKEND = "numpy"
else:
    raise ConfigError(
        f"PHENOSCALE_BACKEND must be 'numba', 'numpy' or 'auto', got {_choice!r}"
    )

__all__ = [
    "BACKEND",
    "binary_dilate",
    "binary_erode",
    "convolve2d_u8",
    "label_components",
    "resize_cubic_u8",
]
