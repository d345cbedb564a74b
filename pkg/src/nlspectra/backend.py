"""Kernel backend selection: compiled extension when available, numpy otherwise.

The environment variable ``NLSPECTRA_BACKEND`` ("compiled" or "python") forces
a choice at import time; :func:`set_backend` switches at runtime (used by the
benchmark).  Both backends expose ``inv_power_sum``, ``stieltjes_sum`` and
``fixed_point_grid`` with identical semantics.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _core_py

_compiled: ModuleType | None
try:
    from . import _core as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

_active: ModuleType = _core_py
_name = "python"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)


def set_backend(name: str) -> None:
    global _active, _name
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled backend requested but the extension is not built")
        _active, _name = _compiled, "compiled"
    elif name == "python":
        _active, _name = _core_py, "python"
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend_name() -> str:
    return _name


def kernels() -> ModuleType:
    """The active kernel namespace; fetched at call sites, so switches apply."""
    return _active


_env = os.environ.get("NLSPECTRA_BACKEND")
if _env:
    set_backend(_env)
elif _compiled is not None:
    set_backend("compiled")
