"""Lossless source codecs for the bit-level baseline: UTF-8 text and raw 8-bit images."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HEADER_BITS = 16
KINDS = ("text_utf8", "image_raw")


class DecodeFailure(Exception):
    """Raised when a received bit stream cannot be turned back into a payload."""


@dataclass(frozen=True)
class BitStream:
    bits: np.ndarray  # uint8 in {0, 1}
    kind: str
    length: int  # number of meaningful bits before any padding

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown stream kind {self.kind!r}")
        b = np.asarray(self.bits)
        if b.size and (b.min() < 0 or b.max() > 1):
            raise ValueError("bits must be 0 or 1")
        if self.length > b.size:
            raise ValueError("recorded length exceeds the number of bits")


def _uint_bits(value: int, width: int) -> np.ndarray:
    if not 0 <= value < (1 << width):
        raise ValueError(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def _bits_uint(bits: np.ndarray) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def source_encode(payload, kind: str) -> BitStream:
    """Header (``HEADER_BITS``-bit length fields) followed by the payload bytes, MSB first.

    Text carries its UTF-8 byte count; images carry height, width and
    channels, each in a ``HEADER_BITS`` field.
    """
    if kind == "text_utf8":
        data = np.frombuffer(str(payload).encode("utf-8"), dtype=np.uint8)
        header = _uint_bits(data.size, HEADER_BITS)
    elif kind == "image_raw":
        img = np.asarray(payload)
        if img.dtype != np.uint8:
            raise ValueError(f"images must be uint8, got {img.dtype}")
        if img.ndim == 2:
            img = img[..., None]
        if img.ndim != 3:
            raise ValueError(f"expected an (H, W[, C]) image, got shape {img.shape}")
        header = np.concatenate([_uint_bits(n, HEADER_BITS) for n in img.shape])
        data = img.reshape(-1)
    else:
        raise ValueError(f"unknown source kind {kind!r}")
    bits = np.concatenate([header, np.unpackbits(data)])
    return BitStream(bits, kind, bits.size)


def source_decode(stream: BitStream):
    """Inverse of ``source_encode``; raises ``DecodeFailure`` on an inconsistent header or bad UTF-8."""
    bits = np.asarray(stream.bits[: stream.length], dtype=np.uint8)
    if stream.kind == "text_utf8":
        if bits.size < HEADER_BITS:
            raise DecodeFailure("stream shorter than its length header")
        n = _bits_uint(bits[:HEADER_BITS])
        body = bits[HEADER_BITS:]
        if body.size != 8 * n:
            raise DecodeFailure(f"header announces {n} bytes, stream carries {body.size / 8:g}")
        try:
            return np.packbits(body).tobytes().decode("utf-8")
        except UnicodeDecodeError as e:
            raise DecodeFailure(f"malformed UTF-8: {e}") from None
    if bits.size < 3 * HEADER_BITS:
        raise DecodeFailure("stream shorter than its image header")
    shape = tuple(_bits_uint(bits[i * HEADER_BITS : (i + 1) * HEADER_BITS]) for i in range(3))
    body = bits[3 * HEADER_BITS :]
    if body.size != 8 * int(np.prod(shape)):
        raise DecodeFailure(f"header announces shape {shape}, stream carries {body.size / 8:g} bytes")
    return np.packbits(body).reshape(shape)
