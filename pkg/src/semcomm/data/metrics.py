"""Task metrics: Recall@k, sentence BLEU, answer accuracy."""
from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np


def recall_at_k(rankings, query_labels, gallery_labels, k: int = 1) -> float:
    """Fraction of queries whose top-``k`` gallery items include a same-label item."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rankings = np.asarray(rankings)
    if rankings.ndim != 2 or rankings.shape[0] == 0:
        raise ValueError("need at least one query ranking")
    q = np.asarray(query_labels)
    g = np.asarray(gallery_labels)
    top = g[rankings[:, :k]]
    return float(np.mean((top == q[:, None]).any(axis=1)))


def _ngrams(tokens: Sequence[int], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: Sequence[int], reference: Sequence[int], max_n: int = 4) -> float:
    """Sentence BLEU without smoothing: geometric mean of clipped n-gram precisions times brevity penalty.

    Any ``n <= max_n`` with zero matched n-grams (including a candidate
    shorter than ``n``) makes the score 0.
    """
    if len(reference) == 0:
        raise ValueError("reference must be nonempty")
    c = len(candidate)
    if c == 0:
        return 0.0
    log_p = 0.0
    for n in range(1, max_n + 1):
        cand = _ngrams(candidate, n)
        total = sum(cand.values())
        if total == 0:
            return 0.0
        ref = _ngrams(reference, n)
        matched = sum(min(cnt, ref[g]) for g, cnt in cand.items())
        if matched == 0:
            return 0.0
        log_p += math.log(matched / total) / max_n
    r = len(reference)
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(log_p)


def corpus_bleu(candidates, references, max_n: int = 4) -> float:
    """Mean of sentence-level BLEU scores."""
    if len(candidates) != len(references):
        raise ValueError("candidate/reference count mismatch")
    if not candidates:
        raise ValueError("empty corpus")
    return float(np.mean([bleu(c, r, max_n) for c, r in zip(candidates, references)]))


def answer_accuracy(predictions, labels) -> float:
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.ndim == 2:
        p = p.argmax(axis=1)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    if p.size == 0:
        raise ValueError("no predictions")
    return float(np.mean(p == y))
