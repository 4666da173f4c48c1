"""Arithmetic backend selection.

The compiled core (tagsim._kernel, Cython) and the pure-Python reference
(tagsim._kernel_pure) expose the same module API. Selection order:

* TAGSIM_BACKEND=compiled  require the extension, ImportError if missing
* TAGSIM_BACKEND=pure      force the reference implementation
* unset or auto            compiled if importable, else pure
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernel_pure


def load_pure() -> ModuleType:
    return _kernel_pure


def load_compiled() -> ModuleType | None:
    try:
        from . import _kernel
    except ImportError:
        return None
    return _kernel


def select(mode: str | None = None) -> ModuleType:
    mode = (mode or os.environ.get("TAGSIM_BACKEND", "auto")).lower()
    if mode == "pure":
        return load_pure()
    if mode == "compiled":
        compiled = load_compiled()
        if compiled is None:
            raise ImportError("compiled backend requested but tagsim._kernel "
                              "is not built (pip install -e . rebuilds it)")
        return compiled
    if mode != "auto":
        raise ValueError(f"unknown backend {mode!r}; use auto, compiled, or pure")
    return load_compiled() or load_pure()


kernel = select()
