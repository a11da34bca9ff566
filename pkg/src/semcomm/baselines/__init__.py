"""Traditional bit-level comparison pipeline."""
from .convcode import GENERATORS, CodedFrame, channel_decode, channel_encode, conv_encode
from .modulation import BITS_PER_SYMBOL, constellation, demodulate, modulate
from .pipeline import BaselineOutcome, baseline_end_to_end
from .source import BitStream, DecodeFailure, source_decode, source_encode
from .viterbi import BACKEND, viterbi_decode

__all__ = [
    "GENERATORS", "CodedFrame", "channel_decode", "channel_encode", "conv_encode", "BITS_PER_SYMBOL",
    "constellation", "demodulate", "modulate", "BaselineOutcome", "baseline_end_to_end", "BitStream",
    "DecodeFailure", "source_decode", "source_encode", "BACKEND", "viterbi_decode",
]
