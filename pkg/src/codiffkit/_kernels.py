"""Select the projection kernel: compiled when available, else pure Python.

``CODIFF_PURE_PYTHON=1`` forces the pure-Python kernel as the default; the
compiled twin stays importable for comparisons.
"""
import os

from . import _fw_fallback

python_min_norm_fw = _fw_fallback.min_norm_fw

try:
    from ._fw_kernel import min_norm_fw as compiled_min_norm_fw
except ImportError:  # extension not built
    compiled_min_norm_fw = None

if compiled_min_norm_fw is not None and not os.environ.get("CODIFF_PURE_PYTHON"):
    min_norm_fw = compiled_min_norm_fw
    BACKEND = "cython"
else:
    min_norm_fw = python_min_norm_fw
    BACKEND = "python"
