"""Hot-kernel backend, chosen once at import.

The compiled ``_ckernels`` extension is preferred; the numpy module
``_pykernels`` is used when the extension is missing or when the
environment variable ``ROBOT_VITALS_PURE`` is set to a non-empty value
other than ``0``.
"""

from __future__ import annotations

import os

from . import _pykernels

_force_pure = os.environ.get("ROBOT_VITALS_PURE", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure backend forced")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def available_backends():
    """Return ``{name: module}`` for every kernel backend importable here."""
    backends = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        backends["cython"] = _ckernels
    return backends


immerkaer_abs_sum = _impl.immerkaer_abs_sum
run_lengths = _impl.run_lengths
entropy_terms = _impl.entropy_terms
windowed_entropy = _impl.windowed_entropy
permutation_abs_count = _impl.permutation_abs_count
box_muller = _impl.box_muller

__all__ = [
    "BACKEND",
    "available_backends",
    "immerkaer_abs_sum",
    "run_lengths",
    "entropy_terms",
    "windowed_entropy",
    "permutation_abs_count",
    "box_muller",
]
