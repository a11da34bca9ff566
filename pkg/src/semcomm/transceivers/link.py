"""Glue between per-user symbol streams and the MIMO channel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from ..channel import ChannelModel, calibrate_noise, estimate_csi, lmmse_detect, sample_channel, transmit


@dataclass(frozen=True)
class LinkConfig:
    model: str = "rician"
    M: int = 4
    K: int = 2
    rician_r: float = 2.0
    sigma_e_sq: float = 0.0

    def __post_init__(self):
        ChannelModel(self.model)
        if self.K < 1 or self.M < self.K:
            raise ValueError(f"need M >= K >= 1, got M={self.M}, K={self.K}")
        if self.model == "awgn" and self.M != self.K:
            raise ValueError("AWGN link requires M == K")

    def with_(self, **kw) -> "LinkConfig":
        return LinkConfig(**{**self.__dict__, **kw})


def mimo_link(X: torch.Tensor, cfg: LinkConfig, snr_db: float, rng, per_block: bool = True) -> torch.Tensor:
    """Send stacked user blocks ``X`` of shape ``(B, K, L)`` and return the L-MMSE estimate.

    ``per_block`` draws one channel per block (evaluation); otherwise a single
    channel is shared by the whole batch (training).
    """
    if X.shape[-2] != cfg.K:
        raise ValueError(f"link configured for K={cfg.K} users, got {X.shape[-2]} streams")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    batch = X.shape[:-2] if per_block else ()
    # separate streams keep H and N identical across CSI settings for paired comparisons
    ch_rng, err_rng, noise_rng = rng.spawn(3)
    ch = sample_channel(cfg.model, cfg.M, cfg.K, cfg.rician_r, ch_rng, batch=tuple(batch), dtype=X.dtype)
    csi = estimate_csi(ch, cfg.sigma_e_sq, err_rng)
    noise = calibrate_noise(snr_db, ch, X)
    Y = transmit(X, ch, noise, noise_rng)
    return lmmse_detect(Y, csi, noise.sigma_n_sq)


def stack_users(streams: list[torch.Tensor]) -> tuple[torch.Tensor, list[int]]:
    """Zero-pad per-user streams ``(B, L_k)`` to a common length and stack as ``(B, K, L)``."""
    lengths = [s.shape[-1] for s in streams]
    L = max(lengths)
    X = torch.stack([F.pad(s, (0, L - s.shape[-1])) for s in streams], dim=-2)
    return X, lengths


def unstack_users(X_hat: torch.Tensor, lengths: list[int]) -> list[torch.Tensor]:
    return [X_hat[..., k, :n] for k, n in enumerate(lengths)]


def through_link(x: torch.Tensor, cfg: LinkConfig, snr_db: float | None, rng, per_block: bool = True) -> torch.Tensor:
    """Push a batch of single-user streams ``(B, L)`` through a K-user channel.

    Consecutive samples share a channel use as users ``0..K-1``; a trailing
    partial group is filled by wrapping around the batch. ``snr_db=None``
    bypasses the channel entirely.
    """
    if snr_db is None:
        return x
    B, L = x.shape
    K = cfg.K
    G = -(-B // K)
    idx = torch.arange(G * K) % B
    X = x[idx].reshape(G, K, L)
    X_hat = mimo_link(X, cfg, snr_db, rng, per_block)
    return X_hat.reshape(G * K, L)[:B]
