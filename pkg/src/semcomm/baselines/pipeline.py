"""Bit-level reference link: source code, convolutional code, modulation, shared MIMO channel."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import torch

from ..transceivers.link import LinkConfig, mimo_link, stack_users, unstack_users
from .convcode import channel_decode, channel_encode
from .modulation import demodulate, modulate
from .source import DecodeFailure, source_decode, source_encode


@dataclass
class BaselineOutcome:
    payload: Any  # decoded payload, or None on failure
    failed: bool
    reason: str = ""
    symbols: int = 0


def baseline_end_to_end(payloads: list, kind: str, scheme: str, link: LinkConfig | None = None,
                        snr_db: float | None = None, rng=None, interleaver_seed: int | None = 0,
                        soft: bool = False) -> list[BaselineOutcome]:
    """Send one payload per user over a single shared channel use and decode each.

    With fewer payloads than the link's K users, the remaining streams carry
    random coded symbols of the same length and act as interference only.
    Demodulation is hard-decision unless ``soft`` is set, in which case the
    real part of each BPSK estimate is handed to the Viterbi decoder.
    """
    if soft and scheme.lower() != "bpsk":
        raise ValueError("soft decoding is only wired for BPSK")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    frames, streams = [], []
    for p in payloads:
        frame = channel_encode(source_encode(p, kind), interleaver_seed)
        sym, _ = modulate(frame.bits, scheme)
        frames.append(frame)
        streams.append(torch.as_tensor(sym, dtype=torch.complex128))
    received = streams
    if link is not None and snr_db is not None and streams:
        if len(streams) > link.K:
            raise ValueError(f"{len(streams)} payloads exceed K={link.K} users")
        L = max(s.numel() for s in streams)
        while len(streams) < link.K:
            bits = rng.integers(0, 2, size=L * 3, dtype=np.uint8)
            streams.append(torch.as_tensor(modulate(bits, scheme)[0][:L], dtype=torch.complex128))
        X, lengths = stack_users([s[None] for s in streams])
        received = unstack_users(mimo_link(X, link, snr_db, rng, per_block=True), lengths)
        received = [r[0] for r in received[: len(frames)]]
    outcomes = []
    for frame, y in zip(frames, received):
        y = y.numpy()
        n = frame.bits.size
        vals = y.real[:n] if soft else demodulate(y, scheme, n)
        try:
            stream = channel_decode(vals, frame.payload_length, kind, interleaver_seed, soft=soft)
            outcomes.append(BaselineOutcome(source_decode(stream), False, symbols=y.size))
        except DecodeFailure as e:
            outcomes.append(BaselineOutcome(None, True, str(e), symbols=y.size))
    return outcomes
