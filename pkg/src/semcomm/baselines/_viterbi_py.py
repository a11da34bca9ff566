"""Pure numpy Viterbi add-compare-select; the reference for the compiled kernel."""
from __future__ import annotations

import numpy as np


def viterbi_kernel(received: np.ndarray, codes: np.ndarray, memory: int) -> np.ndarray:
    """Maximum-correlation path through a zero-started, zero-terminated trellis.

    Args:
        received: ``(T, n)`` float64 soft values, ``+1`` meaning bit 0.
        codes: ``(2**memory, 2)`` int64 index of the ``n``-bit output word for
            each (state, input) pair, MSB first.
        memory: encoder memory; the state holds the last ``memory`` inputs.

    Returns:
        ``(T,)`` uint8 decoded input bits.
    """
    T, n = received.shape
    S = 1 << memory
    # correlation of every possible output word with each received triple
    words = ((np.arange(1 << n)[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.float64)
    metrics = received @ (1.0 - 2.0 * words).T  # (T, 2**n)
    ns = np.arange(S)
    b = ns >> (memory - 1)
    s0 = (ns & ((S >> 1) - 1)) << 1
    s1 = s0 | 1
    c0, c1 = codes[s0, b], codes[s1, b]
    pm = np.full(S, -np.inf)
    pm[0] = 0.0
    decisions = np.empty((T, S), dtype=np.uint8)
    for t in range(T):
        m = metrics[t]
        a0 = pm[s0] + m[c0]
        a1 = pm[s1] + m[c1]
        take1 = a1 > a0
        decisions[t] = take1
        pm = np.where(take1, a1, a0)
    bits = np.empty(T, dtype=np.uint8)
    state = 0
    half = (S >> 1) - 1
    for t in range(T - 1, -1, -1):
        bits[t] = state >> (memory - 1)
        state = ((state & half) << 1) | int(decisions[t, state])
    return bits
