"""Kernel backend selection.

The hot loop lives in ``gfmsim._kernel``, a single source file that works
both as a compiled C extension (built by setup.py) and as plain Python.
Import of the package picks the compiled version when available; the pure
interpretation is always reachable for debugging and benchmarking.

Set ``GFMSIM_BACKEND=pure`` to force the interpreted kernel.
"""

from __future__ import annotations

import importlib.util
import os
import sys
from pathlib import Path

_PURE_NAME = "gfmsim._kernel_pure"


def _load_pure():
    """Load the kernel source as plain Python, bypassing any extension."""
    if _PURE_NAME in sys.modules:
        return sys.modules[_PURE_NAME]
    src = Path(__file__).with_name("_kernel.py")
    spec = importlib.util.spec_from_file_location(_PURE_NAME, src)
    mod = importlib.util.module_from_spec(spec)
    sys.modules[_PURE_NAME] = mod
    spec.loader.exec_module(mod)
    return mod


def _load_default():
    from . import _kernel
    return _kernel


_FORCED = os.environ.get("GFMSIM_BACKEND", "").strip().lower()
if _FORCED == "pure":
    _KERNEL = _load_pure()
elif _FORCED in ("", "auto", "compiled"):
    _KERNEL = _load_default()
    if _FORCED == "compiled" and not _KERNEL.IS_COMPILED:
        raise ImportError(
            "GFMSIM_BACKEND=compiled but the extension is not built")
else:
    raise ImportError(f"unknown GFMSIM_BACKEND value {_FORCED!r}")


def kernel():
    """The active kernel module."""
    return _KERNEL


def pure_kernel():
    """The interpreted kernel, regardless of the active selection."""
    return _load_pure()


def backend_name() -> str:
    return "compiled" if _KERNEL.IS_COMPILED else "pure"
