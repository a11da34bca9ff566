"""Differentiable building blocks shared by the three transceivers.

Everything is a plain ``torch.nn.Module``. Attention modules return their
weights alongside the output so callers can inspect or dump them; nothing is
cached on the module, which keeps evaluation re-entrant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import torch
import torch.nn.functional as F
from torch import nn

__all__ = [
    "TokenSequence",
    "LayerSpec",
    "TextEmbedding",
    "PatchEmbedding",
    "patchify",
    "MultiHeadAttention",
    "FeedForward",
    "EncoderLayer",
    "DecoderLayer",
    "TransformerEncoder",
    "DenseStack",
    "causal_mask",
]


@dataclass
class TokenSequence:
    """Batch of token rows ``(B, T, d)`` with a validity mask ``(B, T)``."""

    tokens: torch.Tensor
    mask: torch.Tensor
    has_cls: bool = False

    def __post_init__(self):
        if self.mask.shape != self.tokens.shape[:2]:
            raise ValueError(f"mask shape {tuple(self.mask.shape)} does not match tokens {tuple(self.tokens.shape)}")
        if self.has_cls and (self.tokens.shape[1] < 1 or not bool(self.mask[:, 0].all())):
            raise ValueError("CLS position must exist and be unmasked")

    @property
    def cls(self) -> torch.Tensor:
        return self.tokens[:, 0]


class LayerSpec(NamedTuple):
    width: int
    activation: str = "linear"
    dropout: float = 0.0


_ACTIVATIONS = {
    "linear": nn.Identity,
    "relu": nn.ReLU,
    "elu": nn.ELU,
    "gelu": nn.GELU,
}


def _init_embedding(t: torch.Tensor) -> None:
    nn.init.normal_(t, std=0.02)


class TextEmbedding(nn.Module):
    """Word vectors plus a learnable 1-D positional encoding, optional CLS."""

    def __init__(self, vocab_size: int, d_model: int, max_len: int, cls: bool = True, pad_id: int = 0):
        super().__init__()
        self.vocab_size = vocab_size
        self.pad_id = pad_id
        self.use_cls = cls
        self.word = nn.Embedding(vocab_size, d_model)
        self.pos = nn.Parameter(torch.empty(max_len + int(cls), d_model))
        _init_embedding(self.pos)
        if cls:
            self.cls_token = nn.Parameter(torch.empty(d_model))
            _init_embedding(self.cls_token)

    def forward(self, ids: torch.Tensor, mask: torch.Tensor | None = None) -> TokenSequence:
        if ids.numel() and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise ValueError(f"token id outside vocabulary of size {self.vocab_size}")
        if mask is None:
            mask = ids != self.pad_id
        x = self.word(ids)
        B = ids.shape[0]
        if self.use_cls:
            x = torch.cat([self.cls_token.expand(B, 1, -1), x], dim=1)
            mask = torch.cat([torch.ones(B, 1, dtype=torch.bool, device=mask.device), mask], dim=1)
        T = x.shape[1]
        if T > self.pos.shape[0]:
            raise ValueError(f"sequence of length {T} exceeds positional table {self.pos.shape[0]}")
        return TokenSequence(x + self.pos[:T], mask, self.use_cls)


def patchify(images: torch.Tensor, patch_size: int) -> torch.Tensor:
    """``(B, H, W, C)`` -> ``(B, H/p * W/p, p*p*C)``, patches in row-major order."""
    B, H, W, C = images.shape
    p = patch_size
    if H % p or W % p:
        raise ValueError(f"image {H}x{W} not divisible by patch size {p}")
    x = images.reshape(B, H // p, p, W // p, p, C).permute(0, 1, 3, 2, 4, 5)
    return x.reshape(B, (H // p) * (W // p), p * p * C)


class PatchEmbedding(nn.Module):
    def __init__(self, image_size: int, patch_size: int, channels: int, d_model: int, cls: bool = True):
        super().__init__()
        if image_size % patch_size:
            raise ValueError(f"image size {image_size} not divisible by patch size {patch_size}")
        self.patch_size = patch_size
        self.num_patches = (image_size // patch_size) ** 2
        self.use_cls = cls
        self.proj = nn.Linear(patch_size * patch_size * channels, d_model)
        self.pos = nn.Parameter(torch.empty(self.num_patches + int(cls), d_model))
        _init_embedding(self.pos)
        if cls:
            self.cls_token = nn.Parameter(torch.empty(d_model))
            _init_embedding(self.cls_token)

    def forward(self, images: torch.Tensor) -> TokenSequence:
        x = self.proj(patchify(images, self.patch_size))
        if x.shape[1] != self.num_patches:
            raise ValueError(f"expected {self.num_patches} patches, got {x.shape[1]}")
        B = x.shape[0]
        if self.use_cls:
            x = torch.cat([self.cls_token.expand(B, 1, -1), x], dim=1)
        mask = torch.ones(x.shape[:2], dtype=torch.bool, device=x.device)
        return TokenSequence(x + self.pos, mask, self.use_cls)


def causal_mask(T: int, device=None) -> torch.Tensor:
    return torch.ones(T, T, dtype=torch.bool, device=device).tril()


class MultiHeadAttention(nn.Module):
    """Scaled dot-product attention over learned projections.

    Self-attention when ``kv`` is omitted; guided (cross) attention otherwise.
    Masked keys get ``-inf`` logits, so they receive exactly zero weight.
    """

    def __init__(self, d_model: int, heads: int):
        super().__init__()
        if d_model % heads:
            raise ValueError(f"d_model={d_model} not divisible by heads={heads}")
        self.heads = heads
        self.d_head = d_model // heads
        self.q = nn.Linear(d_model, d_model)
        self.k = nn.Linear(d_model, d_model)
        self.v = nn.Linear(d_model, d_model)
        self.out = nn.Linear(d_model, d_model)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        B, T, _ = x.shape
        return x.reshape(B, T, self.heads, self.d_head).transpose(1, 2)

    def forward(
        self,
        x: torch.Tensor,
        kv: torch.Tensor | None = None,
        key_mask: torch.Tensor | None = None,
        attn_mask: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        kv = x if kv is None else kv
        if kv.shape[-1] != x.shape[-1]:
            raise ValueError(f"width mismatch: queries {x.shape[-1]}, keys {kv.shape[-1]}")
        q, k, v = self._split(self.q(x)), self._split(self.k(kv)), self._split(self.v(kv))
        logits = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        allowed = None
        if key_mask is not None:
            allowed = key_mask[:, None, None, :]
        if attn_mask is not None:
            allowed = attn_mask if allowed is None else allowed & attn_mask
        if allowed is not None:
            allowed = allowed.expand_as(logits)
            dead = ~allowed.any(dim=-1, keepdim=True)
            logits = logits.masked_fill(~allowed, float("-inf")).masked_fill(dead, 0.0)
            weights = torch.softmax(logits, dim=-1).masked_fill(dead, 0.0)
        else:
            weights = torch.softmax(logits, dim=-1)
        B, _, Tq, _ = weights.shape
        y = (weights @ v).transpose(1, 2).reshape(B, Tq, -1)
        return self.out(y), weights


class FeedForward(nn.Module):
    def __init__(self, d_model: int, d_ff: int, dropout: float = 0.1):
        super().__init__()
        self.fc1 = nn.Linear(d_model, d_ff)
        self.fc2 = nn.Linear(d_ff, d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x):
        return self.fc2(self.drop(F.gelu(self.fc1(x))))


class EncoderLayer(nn.Module):
    """Pre-norm block: ``x + MHSA(LN(x))`` then ``h + FFN(LN(h))``."""

    def __init__(self, d_model: int, heads: int, d_ff: int, dropout: float = 0.1):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.attn = MultiHeadAttention(d_model, heads)
        self.norm2 = nn.LayerNorm(d_model)
        self.ffn = FeedForward(d_model, d_ff, dropout)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, mask=None):
        a, w = self.attn(self.norm1(x), key_mask=mask)
        h = x + self.drop(a)
        h = h + self.drop(self.ffn(self.norm2(h)))
        return h, w


class DecoderLayer(nn.Module):
    """Pre-norm self-attention, guided attention over ``memory``, feed-forward."""

    def __init__(self, d_model: int, heads: int, d_ff: int, dropout: float = 0.1):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, heads)
        self.norm2 = nn.LayerNorm(d_model)
        self.norm_mem = nn.LayerNorm(d_model)
        self.guided_attn = MultiHeadAttention(d_model, heads)
        self.norm3 = nn.LayerNorm(d_model)
        self.ffn = FeedForward(d_model, d_ff, dropout)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, memory, mask=None, memory_mask=None, causal: bool = False):
        if x.shape[-1] != memory.shape[-1]:
            raise ValueError(f"width mismatch: decoder {x.shape[-1]}, memory {memory.shape[-1]}")
        attn_mask = causal_mask(x.shape[1], x.device) if causal else None
        a, w_self = self.self_attn(self.norm1(x), key_mask=mask, attn_mask=attn_mask)
        h = x + self.drop(a)
        g, w_guided = self.guided_attn(self.norm2(h), self.norm_mem(memory), key_mask=memory_mask)
        h = h + self.drop(g)
        h = h + self.drop(self.ffn(self.norm3(h)))
        return h, w_self, w_guided


class TransformerEncoder(nn.Module):
    """Stack of encoder layers followed by a final LayerNorm.

    ``forward`` returns the normalized final output, the raw per-layer outputs
    and the per-layer attention maps.
    """

    def __init__(self, d_model: int, heads: int, d_ff: int, layers: int, dropout: float = 0.1):
        super().__init__()
        self.layers = nn.ModuleList(EncoderLayer(d_model, heads, d_ff, dropout) for _ in range(layers))
        self.norm = nn.LayerNorm(d_model)

    def forward(self, x, mask=None):
        outs, maps = [], []
        for layer in self.layers:
            x, w = layer(x, mask)
            outs.append(x)
            maps.append(w)
        return self.norm(x), outs, maps


class DenseStack(nn.Module):
    """Sequence of ``dropout -> affine -> activation`` layers.

    ``specs`` lists ``(width, activation, dropout)`` per layer, activation one
    of ``linear``, ``relu``, ``elu``, ``gelu``. Applies row-wise to the last axis.
    """

    def __init__(self, in_dim: int, specs: Sequence[LayerSpec | tuple]):
        super().__init__()
        self.in_dim = in_dim
        self.specs = [LayerSpec(*s) for s in specs]
        blocks = []
        width = in_dim
        for s in self.specs:
            if s.activation not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {s.activation!r}")
            blocks.append(nn.Sequential(nn.Dropout(s.dropout), nn.Linear(width, s.width), _ACTIVATIONS[s.activation]()))
            width = s.width
        self.blocks = nn.Sequential(*blocks)
        self.out_dim = width

    def forward(self, x):
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"expected width {self.in_dim}, got {x.shape[-1]}")
        return self.blocks(x)

    def linears(self) -> list[nn.Linear]:
        return [b[1] for b in self.blocks]
