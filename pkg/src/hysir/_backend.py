"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
pure-Python ``_pykernels`` twin.  Set ``HYSIR_PURE_PYTHON=1`` to force the
fallback.
"""
import importlib
import os

_MODULES = {"cython": "hysir._ckernels", "python": "hysir._pykernels"}


def load(name):
    """Return the kernel module for backend ``name`` ("cython" or "python")."""
    if name not in _MODULES:
        raise ValueError(f"unknown kernel backend {name!r}")
    return importlib.import_module(_MODULES[name])


def available():
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


if os.environ.get("HYSIR_PURE_PYTHON", "") not in ("", "0"):
    NAME = "python"
else:
    NAME = available()[0]

kernels = load(NAME)
