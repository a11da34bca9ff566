"""Unit-average-power Gray-mapped constellations with nearest-point demodulation."""
from __future__ import annotations

import numpy as np

BITS_PER_SYMBOL = {"bpsk": 1, "qpsk": 2, "8qam": 3}


def _labels(k: int) -> np.ndarray:
    return ((np.arange(1 << k)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)


def constellation(scheme: str) -> np.ndarray:
    """Points indexed by the integer value of their bit label (MSB first)."""
    scheme = scheme.lower()
    if scheme == "bpsk":
        return np.array([1.0 + 0j, -1.0 + 0j])
    if scheme == "qpsk":
        b = _labels(2)
        return ((1 - 2.0 * b[:, 0]) + 1j * (1 - 2.0 * b[:, 1])) / np.sqrt(2.0)
    if scheme == "8qam":
        # rectangular 4 x 2: two Gray bits pick the in-phase level, one bit the quadrature sign
        level = {(0, 0): -3.0, (0, 1): -1.0, (1, 1): 1.0, (1, 0): 3.0}
        b = _labels(3)
        pts = np.array([level[(r[0], r[1])] + 1j * (1 - 2.0 * r[2]) for r in b])
        return pts / np.sqrt(6.0)
    raise ValueError(f"unknown modulation scheme {scheme!r}")


def modulate(bits, scheme: str) -> tuple[np.ndarray, int]:
    """Map bits to symbols, zero-padding to a whole number of symbols.

    Returns the symbols and the number of pad bits appended.
    """
    k = BITS_PER_SYMBOL.get(scheme.lower())
    if k is None:
        raise ValueError(f"unknown modulation scheme {scheme!r}")
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    pad = (-bits.size) % k
    bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    idx = (bits.reshape(-1, k).astype(np.int64) * (1 << np.arange(k - 1, -1, -1))).sum(-1)
    return constellation(scheme)[idx], pad


def demodulate(symbols, scheme: str, num_bits: int | None = None) -> np.ndarray:
    """Hard decision: label of the nearest constellation point, trimmed to ``num_bits``."""
    pts = constellation(scheme)
    k = BITS_PER_SYMBOL[scheme.lower()]
    y = np.asarray(symbols).reshape(-1)
    idx = np.argmin(np.abs(y[:, None] - pts[None, :]), axis=1)
    bits = _labels(k)[idx].reshape(-1)
    return bits if num_bits is None else bits[:num_bits]
