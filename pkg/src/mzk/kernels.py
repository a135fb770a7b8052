"""Hot-loop kernel selection: compiled extension if available, numpy otherwise.

Set MZK_NO_EXT=1 to force the pure numpy path.  Both backends are
bit-identical; see benchmarks/kernel_benchmark.py for the speed gap.
"""

from __future__ import annotations

import os

if os.environ.get("MZK_NO_EXT", "0") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND: str = _impl.BACKEND
coupling_substep = _impl.coupling_substep
