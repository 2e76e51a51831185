"""Trellis kernel selection: compiled extension with pure-numpy fallback.

Set LOGITGOP_PURE=1 to force the fallback even when the extension built.
Both kernels share one contract and one tie-breaking rule, so results
are identical either way; only speed differs.
"""

import os

from . import _trellis_py

if os.environ.get("LOGITGOP_PURE", "") not in ("", "0"):
    best_path = _trellis_py.best_path
    NAME = "pure"
else:
    try:
        from ._trellis import best_path

        NAME = "compiled"
    except ImportError:
        best_path = _trellis_py.best_path
        NAME = "pure"
