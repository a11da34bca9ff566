"""Rate-1/3 convolutional code (constraint length 7) with a seeded block interleaver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .source import BitStream
from .viterbi import viterbi_decode

GENERATORS = (0o133, 0o171, 0o165)
CONSTRAINT = 7
MEMORY = CONSTRAINT - 1
NUM_STATES = 1 << MEMORY
RATE_INV = len(GENERATORS)


def _parity(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    out = np.zeros_like(x)
    while np.any(x):
        out ^= x & 1
        x >>= 1
    return out


def output_table() -> np.ndarray:
    """Coded bits for every (state, input) pair, shape ``(NUM_STATES, 2, RATE_INV)``.

    The shift register is ``input << MEMORY | state``; the state holds the
    previous ``MEMORY`` inputs with the most recent one in its top bit.
    """
    state = np.arange(NUM_STATES)[:, None]
    bit = np.arange(2)[None, :]
    reg = (bit << MEMORY) | state
    return np.stack([_parity(reg & g) for g in GENERATORS], axis=-1).astype(np.uint8)


OUTPUTS = output_table()


@dataclass(frozen=True)
class CodedFrame:
    bits: np.ndarray
    payload_length: int
    kind: str
    interleaver_seed: int | None
    rate: float = 1.0 / RATE_INV

    def __post_init__(self):
        expected = RATE_INV * (self.payload_length + MEMORY)
        if self.bits.size != expected:
            raise ValueError(f"coded frame has {self.bits.size} bits, expected {expected}")


def conv_encode(bits: np.ndarray) -> np.ndarray:
    """Zero-terminated encoding: ``RATE_INV * (len(bits) + MEMORY)`` output bits."""
    bits = np.concatenate([np.asarray(bits, dtype=np.uint8), np.zeros(MEMORY, dtype=np.uint8)])
    out = np.empty((bits.size, RATE_INV), dtype=np.uint8)
    state = 0
    for t, b in enumerate(bits):
        out[t] = OUTPUTS[state, b]
        state = (int(b) << (MEMORY - 1)) | (state >> 1)
    return out.reshape(-1)


def interleaver(n: int, seed: int | None) -> np.ndarray:
    """Permutation applied to a coded frame of ``n`` bits; identity when ``seed`` is None."""
    if seed is None:
        return np.arange(n)
    return np.random.default_rng(seed).permutation(n)


def channel_encode(stream: BitStream, interleaver_seed: int | None = 0) -> CodedFrame:
    payload = np.asarray(stream.bits[: stream.length], dtype=np.uint8)
    coded = conv_encode(payload)
    coded = coded[interleaver(coded.size, interleaver_seed)]
    return CodedFrame(coded, payload.size, stream.kind, interleaver_seed)


def channel_decode(received, payload_length: int, kind: str, interleaver_seed: int | None = 0,
                   soft: bool = True) -> BitStream:
    """Viterbi-decode received values for one frame.

    ``received`` holds one value per coded bit: soft values with bit 0
    mapped to ``+1`` and bit 1 to ``-1`` when ``soft`` is true, hard bits in
    ``{0, 1}`` otherwise.
    """
    r = np.asarray(received, dtype=np.float64).reshape(-1)
    n = RATE_INV * (payload_length + MEMORY)
    if r.size != n:
        raise ValueError(f"frame length mismatch: got {r.size} values, expected {n}")
    if not soft:
        r = 1.0 - 2.0 * r
    deint = np.empty_like(r)
    deint[interleaver(n, interleaver_seed)] = r
    bits = viterbi_decode(deint.reshape(-1, RATE_INV), OUTPUTS)[:payload_length]
    return BitStream(bits, kind, payload_length)
