"""Viterbi decoding with a compiled kernel when available.

The Cython extension ``_viterbi_ext`` is used if it was built; otherwise the
numpy reference ``_viterbi_py`` is selected at import time. Both return the
same bits for the same input. Set ``SEMCOMM_PURE_PYTHON=1`` to force the
fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _viterbi_py

try:
    if os.environ.get("SEMCOMM_PURE_PYTHON") == "1":
        raise ImportError("compiled kernel disabled by environment")
    from . import _viterbi_ext as _backend

    BACKEND = "cython"
except ImportError:
    _backend = _viterbi_py
    BACKEND = "numpy"


def codes_from_outputs(outputs: np.ndarray) -> np.ndarray:
    """``(S, 2, n)`` coded bits -> ``(S, 2)`` output-word indices (MSB first)."""
    n = outputs.shape[-1]
    weights = 1 << np.arange(n - 1, -1, -1)
    return np.ascontiguousarray((outputs.astype(np.int64) * weights).sum(-1), dtype=np.int64)


def viterbi_decode(received: np.ndarray, outputs: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Decode ``(T, n)`` soft values (``+1`` for bit 0) against a trellis output table.

    Ties between survivors resolve toward the even predecessor in both
    backends, so they agree bit for bit.
    """
    S = outputs.shape[0]
    memory = S.bit_length() - 1
    if 1 << memory != S or outputs.shape[1] != 2:
        raise ValueError(f"output table shape {outputs.shape} is not a binary trellis")
    r = np.ascontiguousarray(received, dtype=np.float64)
    if r.ndim != 2 or r.shape[1] != outputs.shape[-1]:
        raise ValueError(f"received shape {r.shape} does not match {outputs.shape[-1]} outputs per step")
    impl = {"cython": _backend, "numpy": _viterbi_py, None: _backend}[backend]
    if backend == "cython" and BACKEND != "cython":
        raise RuntimeError("compiled Viterbi kernel is not available")
    if r.shape[0] == 0:
        return np.zeros(0, dtype=np.uint8)
    return impl.viterbi_kernel(r, codes_from_outputs(outputs), memory)
