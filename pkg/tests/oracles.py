"""Independent reference implementations used only by the tests.

Each oracle is written from the mathematical definition with plain loops or
a different algebraic form than the library code, so agreement is evidence
rather than tautology.
"""
from __future__ import annotations

import math
from collections import Counter

import numpy as np
import torch


def lmmse_receive_side(Y, H_hat, sigma_n_sq):
    """``H^H (H H^H + s I_M)^-1 Y``: the M x M form of the linear MMSE detector."""
    Y = np.asarray(Y, dtype=np.complex128)
    H = np.asarray(H_hat, dtype=np.complex128)
    M = H.shape[0]
    G = H @ H.conj().T + sigma_n_sq * np.eye(M)
    return H.conj().T @ np.linalg.solve(G, Y)


def central_difference_check(fn, inputs: list[torch.Tensor], eps: float = 1e-5, seed: int = 0):
    """Compare autograd against central differences for ``sum(fn(*inputs) * R)``.

    ``R`` is a fixed random projection so vector-valued blocks reduce to a
    scalar. Complex inputs are perturbed along their real and imaginary
    parts separately. Returns the relative error
    ``||g_auto - g_num|| / max(||g_auto||, ||g_num||)``.
    """
    gen = torch.Generator().manual_seed(seed)
    leaves = [x.detach().clone().requires_grad_(True) for x in inputs]
    out = fn(*leaves)
    out_t = out if isinstance(out, torch.Tensor) else torch.cat([o.reshape(-1) for o in out])
    if out_t.is_complex():
        R = torch.randn(out_t.shape, dtype=torch.complex128, generator=gen)
        project = lambda o: (o * R.conj()).real.sum()  # noqa: E731
    else:
        R = torch.randn(out_t.shape, dtype=out_t.dtype, generator=gen)
        project = lambda o: (o * R).sum()  # noqa: E731

    def scalar(*xs):
        o = fn(*xs)
        o = o if isinstance(o, torch.Tensor) else torch.cat([t.reshape(-1) for t in o])
        return project(o)

    s = project(out_t)
    grads = torch.autograd.grad(s, leaves, allow_unused=True)
    auto, num = [], []
    with torch.no_grad():
        for k, x in enumerate(leaves):
            g = grads[k] if grads[k] is not None else torch.zeros_like(x)
            base = x.detach().clone()
            flat = base.view(-1)
            parts = [1.0, 1j] if base.is_complex() else [1.0]
            for i in range(flat.numel()):
                for unit in parts:
                    orig = flat[i].clone()
                    flat[i] = orig + eps * unit
                    xs = [base if j == k else leaves[j].detach() for j in range(len(leaves))]
                    fp = float(scalar(*xs))
                    flat[i] = orig - eps * unit
                    fm = float(scalar(*xs))
                    flat[i] = orig
                    num.append((fp - fm) / (2 * eps))
                    gi = g.reshape(-1)[i]
                    # for complex leaves torch reports dL/dRe + i dL/dIm
                    if not base.is_complex():
                        auto.append(float(gi))
                    elif unit == 1.0:
                        auto.append(float(gi.real))
                    else:
                        auto.append(float(gi.imag))
    a, n = np.asarray(auto), np.asarray(num)
    denom = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / denom)


def bleu_bruteforce(candidate: list, reference: list, max_n: int = 4) -> float:
    """Sentence BLEU with clipped n-gram precision, uniform weights, brevity penalty, no smoothing."""
    if not candidate:
        return 0.0
    logs = []
    for n in range(1, max_n + 1):
        cand = [tuple(candidate[i : i + n]) for i in range(len(candidate) - n + 1)]
        ref = [tuple(reference[i : i + n]) for i in range(len(reference) - n + 1)]
        if not cand:
            return 0.0
        matched = 0
        ref_counts = Counter(ref)
        used = Counter()
        for g in cand:
            if used[g] < ref_counts[g]:
                used[g] += 1
                matched += 1
        if matched == 0:
            return 0.0
        logs.append(math.log(matched / len(cand)))
    c, r = len(candidate), len(reference)
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return bp * math.exp(sum(logs) / max_n)


def recall_bruteforce(rankings, query_labels, gallery_labels, k: int) -> float:
    hits = 0
    for q, row in enumerate(rankings):
        if any(gallery_labels[g] == query_labels[q] for g in list(row)[:k]):
            hits += 1
    return hits / len(rankings)


def ce_bruteforce(logits: np.ndarray, target: np.ndarray, mask: np.ndarray | None = None) -> float:
    logits = np.asarray(logits, dtype=np.float64).reshape(-1, logits.shape[-1])
    target = np.asarray(target).reshape(-1)
    mask = np.ones_like(target, dtype=bool) if mask is None else np.asarray(mask).reshape(-1)
    total, count = 0.0, 0
    for row, t, m in zip(logits, target, mask):
        if not m:
            continue
        mx = max(row)
        lse = mx + math.log(sum(math.exp(v - mx) for v in row))
        total += lse - row[t]
        count += 1
    return total / max(count, 1)


def ir_loss_bruteforce(z: np.ndarray, labels: np.ndarray, margin: float) -> float:
    pos, neg = [], []
    n = len(labels)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            s = float(sum(a * b for a, b in zip(z[i], z[j])))
            if labels[i] == labels[j]:
                pos.append(1.0 - s)
            else:
                neg.append(max(s - margin, 0.0))
    loss = sum(pos) / len(pos)
    if neg:
        loss += sum(neg) / len(neg)
    return loss
