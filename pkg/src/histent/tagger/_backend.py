"""Pick the compiled kernel when it is importable; HISTENT_PURE_PYTHON=1 forces the fallback."""
import os

if os.environ.get("HISTENT_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernel_py as kernel
else:
    try:
        from . import _kernel as kernel
    except ImportError:
        from . import _kernel_py as kernel

BACKEND = kernel.NAME
