"""Image retrieval transceiver: ViT semantic encoder, CLS-only transmission."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..layers import PatchEmbedding, TransformerEncoder
from .jsc import JSCDecoder, JSCEncoder
from .link import LinkConfig, through_link


@dataclass
class IRConfig:
    image_size: int = 32
    patch_size: int = 8
    channels: int = 3
    d_model: int = 128
    heads: int = 4
    d_ff: int = 256
    layers: int = 4
    dropout: float = 0.1
    L_C: int = 32
    jsc_hidden: list[int] = field(default_factory=lambda: [256])
    jsc_dropout: float = 0.0

    @property
    def tokens(self) -> int:
        return (self.image_size // self.patch_size) ** 2 + 1

    @property
    def symbols_per_image(self) -> int:
        return self.L_C


class IRTransceiver(nn.Module):
    def __init__(self, cfg: IRConfig):
        super().__init__()
        self.cfg = cfg
        self.embed = PatchEmbedding(cfg.image_size, cfg.patch_size, cfg.channels, cfg.d_model)
        self.encoder = TransformerEncoder(cfg.d_model, cfg.heads, cfg.d_ff, cfg.layers, cfg.dropout)
        self.jsc_enc = JSCEncoder(cfg.d_model, cfg.L_C, cfg.jsc_hidden, dropout=cfg.jsc_dropout)
        self.jsc_dec = JSCDecoder(cfg.d_model, cfg.L_C, list(reversed(cfg.jsc_hidden)), dropout=cfg.jsc_dropout)

    def semantic_modules(self) -> list[nn.Module]:
        return [self.embed, self.encoder]

    def jsc_modules(self) -> list[nn.Module]:
        return [self.jsc_enc, self.jsc_dec]

    def semantic_encode(self, images: torch.Tensor) -> torch.Tensor:
        """``(B, H, W, C)`` -> l2-normalized CLS semantic vectors ``(B, L_S)``."""
        seq = self.embed(images)
        out, _, _ = self.encoder(seq.tokens, seq.mask)
        return F.normalize(out[:, 0], dim=-1)

    def jsc_encode(self, z: torch.Tensor) -> torch.Tensor:
        return self.jsc_enc(z)

    def jsc_decode(self, x_hat: torch.Tensor) -> torch.Tensor:
        return self.jsc_dec(x_hat)

    def forward(self, images, link: LinkConfig | None = None, snr_db: float | None = None, rng=None,
                per_block: bool = True, normalize: bool = True) -> tuple[torch.Tensor, torch.Tensor]:
        """Semantic vector and its channel-recovered estimate for each image."""
        z = self.semantic_encode(images)
        x = self.jsc_encode(z)
        if link is not None and snr_db is not None:
            x = through_link(x, link, snr_db, rng, per_block)
        z_hat = self.jsc_decode(x)
        if normalize:
            z_hat = F.normalize(z_hat, dim=-1)
        return z, z_hat


def ir_retrieve(z_hat, gallery, k: int = 1, exclude=None) -> np.ndarray:
    """Rank gallery rows by Euclidean distance to each query row; return top-``k`` indices.

    Ties go to the lower gallery index. ``exclude[q]`` (optional) names a
    gallery index to drop for query ``q``, e.g. the query itself.
    """
    q = np.atleast_2d(np.asarray(torch.as_tensor(z_hat).detach().cpu(), dtype=np.float64))
    g = np.atleast_2d(np.asarray(torch.as_tensor(gallery).detach().cpu(), dtype=np.float64))
    if g.shape[0] == 0 or g.size == 0:
        raise ValueError("empty gallery")
    d = np.sqrt(((q[:, None, :] - g[None, :, :]) ** 2).sum(-1))
    if exclude is not None:
        d[np.arange(len(q)), np.asarray(exclude)] = np.inf
    order = np.argsort(d, axis=1, kind="stable")
    kk = min(k, g.shape[0] - (exclude is not None))
    return order[:, :kk]
