"""Kernel backend selection.

The compiled extension is used when it imports; set ``TIMECONS_PURE=1`` to force
the numpy fallback.  ``BACKEND`` names the active one.
"""

import os

from . import _pykernels

if os.environ.get("TIMECONS_PURE", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

rule1_mark = _impl.rule1_mark
rule2_mark = _impl.rule2_mark
