"""Backend selection for the shell quadrature.

The compiled core is used when it imports; set ``KERRCHAIN_BACKEND=python``
to force the numpy path.
"""
from __future__ import annotations

import os

from . import _shell_py

try:
    from . import _shell_compiled
except ImportError:  # extension not built
    _shell_compiled = None

HAVE_COMPILED = _shell_compiled is not None
_IMPLS = {"python": _shell_py}
if HAVE_COMPILED:
    _IMPLS["compiled"] = _shell_compiled


def default_name() -> str:
    forced = os.environ.get("KERRCHAIN_BACKEND", "").strip().lower()
    if forced:
        if forced not in ("python", "compiled"):
            raise ValueError(f"KERRCHAIN_BACKEND must be 'python' or 'compiled', got {forced!r}")
        if forced == "compiled" and not HAVE_COMPILED:
            raise ImportError("KERRCHAIN_BACKEND=compiled but the extension is not built")
        return forced
    return "compiled" if HAVE_COMPILED else "python"


def available() -> list[str]:
    return sorted(_IMPLS)


def get(name: str | None = None):
    name = name or default_name()
    try:
        return _IMPLS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available (have {available()})") from None
