"""Toy parallel corpus from an invertible rule-based "language pair".

The source language is random strings over a small word list. Translation
renames each word through a fixed bijection and then reverses every
consecutive window of ``window`` tokens, so the gold target of any source is
computable by rule and the mapping is a bijection.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..transceivers.mt import NUM_SPECIAL

_SYLLABLES = ("ka", "lo", "mi", "tu", "re", "sa", "no", "vi", "do", "pe", "zu", "ga")


def _words(n: int, prefix: str) -> list[str]:
    out = []
    for a in _SYLLABLES:
        for b in _SYLLABLES:
            if a != b:
                out.append(prefix + a + b)
            if len(out) == n:
                return out
    raise ValueError(f"cannot make {n} words")


@dataclass
class ToyGrammar:
    num_words: int = 24
    window: int = 3
    grammar_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.window <= 3:
            raise ValueError("reordering window must be 1..3")
        if self.num_words + NUM_SPECIAL > 64:
            raise ValueError("vocabularies are limited to 64 tokens")
        self.src_words = _words(self.num_words, "")
        self.tgt_words = _words(self.num_words, "x")
        perm = np.random.default_rng(self.grammar_seed).permutation(self.num_words)
        self.rename = {NUM_SPECIAL + i: NUM_SPECIAL + int(p) for i, p in enumerate(perm)}

    @property
    def vocab_size(self) -> int:
        return NUM_SPECIAL + self.num_words

    def translate(self, src: list[int]) -> list[int]:
        renamed = [self.rename[t] for t in src]
        w = self.window
        out = []
        for i in range(0, len(renamed), w):
            out.extend(reversed(renamed[i : i + w]))
        return out

    def render(self, ids: list[int], side: str = "src") -> str:
        words = self.src_words if side == "src" else self.tgt_words
        return " ".join(words[t - NUM_SPECIAL] for t in ids)

    def parse(self, text: str, side: str = "src") -> list[int]:
        """Inverse of :meth:`render`; raises ``ValueError`` on unknown words."""
        words = self.src_words if side == "src" else self.tgt_words
        lookup = {w: NUM_SPECIAL + i for i, w in enumerate(words)}
        try:
            return [lookup[w] for w in text.split()]
        except KeyError as e:
            raise ValueError(f"unknown word {e.args[0]!r}") from None


@dataclass
class ParallelCorpus:
    source: list[list[int]]
    target: list[list[int]]
    grammar: ToyGrammar
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    meta: dict = field(default_factory=dict)

    def oracle(self, src: list[int]) -> list[int]:
        return self.grammar.translate(src)

    def split(self, part: str) -> tuple[list[list[int]], list[list[int]]]:
        idx = self.train_idx if part == "train" else self.test_idx
        return [self.source[i] for i in idx], [self.target[i] for i in idx]


def gen_translation(num_pairs: int = 2000, max_len: int = 10, seed: int = 0, min_len: int | None = None,
                    num_words: int = 24, window: int = 3, test_fraction: float = 0.2,
                    grammar_seed: int = 0) -> ParallelCorpus:
    """Sample ``num_pairs`` source sentences with lengths in ``[min_len, max_len]``."""
    if max_len < 3:
        raise ValueError(f"max_len must be >= 3, got {max_len}")
    min_len = min(4, max_len) if min_len is None else min_len
    if not 1 <= min_len <= max_len:
        raise ValueError(f"bad length range [{min_len}, {max_len}]")
    g = ToyGrammar(num_words, window, grammar_seed)
    rng = np.random.default_rng(seed)
    lengths = rng.integers(min_len, max_len + 1, size=num_pairs)
    source = [(NUM_SPECIAL + rng.integers(0, num_words, size=n)).tolist() for n in lengths]
    target = [g.translate(s) for s in source]
    order = rng.permutation(num_pairs)
    n_test = int(round(test_fraction * num_pairs))
    return ParallelCorpus(source, target, g, np.sort(order[n_test:]), np.sort(order[:n_test]), seed,
                          {"num_pairs": num_pairs, "min_len": min_len, "max_len": max_len,
                           "num_words": num_words, "window": window, "grammar_seed": grammar_seed,
                           "test_fraction": test_fraction})
