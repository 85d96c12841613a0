"""Backend selection for the hot kernels.

The compiled ``spgpnav._core`` extension is used when it imports; otherwise the
numpy implementation in ``spgpnav._fallback`` takes over. Set
``SPGPNAV_PURE_PYTHON=1`` to force the fallback.
"""

import os

from spgpnav import _fallback

SOLVED = _fallback.SOLVED
INFEASIBLE = _fallback.INFEASIBLE
MAX_ITER = _fallback.MAX_ITER

_core = None
if os.environ.get("SPGPNAV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from spgpnav import _core
    except ImportError:
        _core = None

if _core is not None:
    BACKEND = "cython"
    assemble = _core.assemble
    solve_qp = _core.solve_qp
    hausdorff = _core.hausdorff
else:
    BACKEND = "python"
    assemble = _fallback.assemble
    solve_qp = _fallback.solve_qp
    hausdorff = _fallback.hausdorff

__all__ = ["BACKEND", "assemble", "solve_qp", "hausdorff", "SOLVED", "INFEASIBLE", "MAX_ITER"]
