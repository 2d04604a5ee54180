"""Kernel backend selection.

The spur shortest-path search (the inner loop of the k-cheapest-path
enumerator) exists twice: a compiled Cython extension and a pure-Python
fallback with the identical contract.  The compiled one is used when it was
built; setting AEVPLAN_PURE_KERNELS=1 forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("AEVPLAN_PURE_KERNELS", "") not in ("", "0"):
    _backend = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as _backend  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        _backend = _kernels_py
        COMPILED = False

spur_shortest_path = _backend.spur_shortest_path


def backend_name() -> str:
    return "compiled" if COMPILED else "pure-python"


def get_backend(name: str):
    """Fetch a backend module by name (used by the benchmark)."""
    if name == "pure-python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels  # raises ImportError if not built

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def adapt_graph(indptr, heads):
    """Convert CSR index arrays into the container the backend wants."""
    if COMPILED:
        return (
            np.ascontiguousarray(indptr, dtype=np.int32),
            np.ascontiguousarray(heads, dtype=np.int32),
        )
    return list(indptr), list(heads)


def adapt_weights(weights):
    if COMPILED:
        return np.ascontiguousarray(weights, dtype=np.float64)
    return list(weights)


def new_mask(size: int) -> bytearray:
    """Zeroed ban mask; bytearray works for both backends."""
    return bytearray(size)
