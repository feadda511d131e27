"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
always available.  Set SRCD_KERNEL=python or SRCD_KERNEL=compiled to force a
choice (forcing "compiled" raises if the extension is missing).  Both
backends implement the same contracts; `benchmarks/kernel_bench.py` compares
them.
"""

from __future__ import annotations

import os

from . import _numpy_kernels

try:
    from . import _kernels as _compiled
except ImportError:          # pragma: no cover - depends on build environment
    _compiled = None

_forced = os.environ.get("SRCD_KERNEL", "").strip().lower()
if _forced == "python":
    _impl = _numpy_kernels
elif _forced == "compiled":
    if _compiled is None:
        raise ImportError("SRCD_KERNEL=compiled but the srcd._kernels extension is not built")
    _impl = _compiled
else:
    _impl = _compiled if _compiled is not None else _numpy_kernels

BACKEND: str = _impl.BACKEND
HAVE_COMPILED: bool = _compiled is not None

assemble_hessians = _impl.assemble_hessians
jet_terms = _impl.jet_terms

# the fused compiled step handles small dimensions only; route large ones to numpy
if _impl is _numpy_kernels:
    step_expmul = _numpy_kernels.step_expmul
else:
    def step_expmul(g, m):
        if g.shape[-1] <= 8:
            return _compiled.step_expmul(g, m)
        return _numpy_kernels.step_expmul(g, m)

expm = _numpy_kernels.expm


def backends() -> dict:
    """Available backend modules keyed by name (for tests and benchmarks)."""
    out = {"python": _numpy_kernels}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
