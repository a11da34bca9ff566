"""K-user single-antenna uplink to an M-antenna receiver.

Symbols live in complex torch tensors so that the JSC codecs can be trained
through the channel: ``H`` and ``N`` are sampled from seeded numpy generators
and enter the graph as constants, gradients flow through ``X`` and ``Y``.

Shapes follow the receiver's view of one block: ``X`` is ``(..., K, L)``,
``H`` is ``(..., M, K)``, ``Y`` is ``(..., M, L)``. Leading batch dimensions
hold independent blocks (block fading: one ``H`` per block).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import torch

__all__ = [
    "ChannelModel",
    "ChannelRealization",
    "CsiEstimate",
    "NoiseSpec",
    "DetectionError",
    "sample_channel",
    "estimate_csi",
    "calibrate_noise",
    "transmit",
    "lmmse_detect",
    "power_normalize",
    "real_to_complex",
    "complex_to_real",
    "measured_snr_db",
]


class ChannelModel(str, enum.Enum):
    AWGN = "awgn"
    RAYLEIGH = "rayleigh"
    RICIAN = "rician"


class DetectionError(ArithmeticError):
    """Raised when the L-MMSE system is singular (noiseless, rank-deficient CSI)."""


@dataclass(frozen=True)
class ChannelRealization:
    H: torch.Tensor
    model: ChannelModel
    rician_r: float = 0.0

    @property
    def M(self) -> int:
        return self.H.shape[-2]

    @property
    def K(self) -> int:
        return self.H.shape[-1]


@dataclass(frozen=True)
class CsiEstimate:
    H_hat: torch.Tensor
    sigma_e_sq: float


@dataclass(frozen=True)
class NoiseSpec:
    # per-block variance, shape = leading batch shape of the block (or scalar)
    sigma_n_sq: torch.Tensor
    target_snr_db: float


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _cn(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with E|z|^2 = var."""
    scale = math.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channel(
    model: ChannelModel | str,
    M: int,
    K: int,
    rician_r: float = 2.0,
    seed=None,
    batch: tuple[int, ...] = (),
    dtype: torch.dtype = torch.complex64,
) -> ChannelRealization:
    """Draw one channel matrix per block.

    Rayleigh entries are CN(0, 1); Rician entries are CN(mu, sigma^2) with
    ``mu = sqrt(r/(r+1))`` and ``sigma^2 = 1/(r+1)``, so ``E|h|^2 = 1`` for both.
    AWGN is the identity and requires ``M == K``.
    """
    model = ChannelModel(model)
    if K < 1 or M < K:
        raise ValueError(f"need M >= K >= 1, got M={M}, K={K}")
    if rician_r < 0:
        raise ValueError(f"rician_r must be nonnegative, got {rician_r}")
    shape = tuple(batch) + (M, K)
    if model is ChannelModel.AWGN:
        if M != K:
            raise ValueError("AWGN channel requires M == K (H = I)")
        H = np.broadcast_to(np.eye(M, dtype=complex), shape).copy()
    else:
        rng = _rng(seed)
        if model is ChannelModel.RAYLEIGH:
            H = _cn(rng, shape)
        else:
            mu = math.sqrt(rician_r / (rician_r + 1.0))
            H = mu + _cn(rng, shape, 1.0 / (rician_r + 1.0))
    r = float(rician_r) if model is ChannelModel.RICIAN else 0.0
    return ChannelRealization(torch.as_tensor(H).to(dtype), model, r)


def estimate_csi(channel: ChannelRealization, sigma_e_sq: float, seed=None) -> CsiEstimate:
    """Return ``H_hat = H + dH`` with ``dH ~ CN(0, sigma_e_sq)`` i.i.d."""
    if sigma_e_sq < 0:
        raise ValueError(f"sigma_e_sq must be nonnegative, got {sigma_e_sq}")
    if sigma_e_sq == 0:
        return CsiEstimate(channel.H.clone(), 0.0)
    err = _cn(_rng(seed), tuple(channel.H.shape), sigma_e_sq)
    H_hat = channel.H + torch.as_tensor(err).to(channel.H.dtype)
    return CsiEstimate(H_hat, float(sigma_e_sq))


def calibrate_noise(target_snr_db: float, channel: ChannelRealization, X: torch.Tensor) -> NoiseSpec:
    """Noise variance giving the requested SNR per complex receive dimension.

    ``sum_k ||h_k x_k||^2 / (M * L * sigma_n^2) = 10^(snr/10)``, evaluated per block.
    """
    X = X.detach()
    if X.shape[-2] != channel.K:
        raise ValueError(f"X has {X.shape[-2]} user rows, channel has K={channel.K}")
    # ||h_k x_k^T||_F^2 = ||h_k||^2 ||x_k||^2
    h_energy = channel.H.abs().pow(2).sum(dim=-2)  # (..., K)
    x_energy = X.abs().pow(2).sum(dim=-1)  # (..., K)
    signal = (h_energy * x_energy).sum(dim=-1)
    if torch.any(signal <= 0):
        raise ValueError("cannot calibrate noise for an all-zero transmit block")
    M, L = channel.M, X.shape[-1]
    snr_lin = 10.0 ** (target_snr_db / 10.0)
    sigma = signal.real.to(torch.float64) / (M * L * snr_lin)
    return NoiseSpec(sigma, float(target_snr_db))


def transmit(X: torch.Tensor, channel: ChannelRealization, noise: NoiseSpec, seed=None) -> torch.Tensor:
    """``Y = H X + N``; differentiable in ``X``."""
    H = channel.H
    if X.shape[-2] != H.shape[-1]:
        raise ValueError(f"shape mismatch: H is {tuple(H.shape)}, X is {tuple(X.shape)}")
    H = H.to(X.dtype)
    Y = H @ X
    sig = torch.as_tensor(noise.sigma_n_sq, dtype=torch.float64)
    if torch.any(sig > 0):
        N = _cn(_rng(seed), tuple(Y.shape))
        scale = sig.sqrt().reshape(sig.shape + (1, 1)).numpy()
        Y = Y + torch.as_tensor(N * scale).to(Y.dtype)
    return Y


def lmmse_detect(Y: torch.Tensor, csi: CsiEstimate, sigma_n_sq) -> torch.Tensor:
    """L-MMSE estimate of the user streams, ``H^H (H H^H + s I)^-1 Y``.

    Solved in the equivalent K x K form ``(H^H H + s I)^-1 H^H Y``; with
    ``s = 0`` this is the least-squares solution, which needs full column rank.
    """
    H = csi.H_hat.to(Y.dtype)
    if H.shape[-2] != Y.shape[-2]:
        raise ValueError(f"shape mismatch: H_hat is {tuple(H.shape)}, Y is {tuple(Y.shape)}")
    s = torch.as_tensor(sigma_n_sq, dtype=torch.float64)
    if torch.any(s < 0):
        raise ValueError("sigma_n_sq must be nonnegative")
    K = H.shape[-1]
    Hh = H.mH
    gram = Hh @ H
    if torch.any(s == 0):
        rank = torch.linalg.matrix_rank(gram.detach())
        if torch.any(rank < K):
            raise DetectionError("noiseless L-MMSE with rank-deficient channel estimate")
    eye = torch.eye(K, dtype=Y.dtype)
    A = gram + s.to(Y.real.dtype).reshape(s.shape + (1, 1)) * eye
    return torch.linalg.solve(A, Hh @ Y)


def power_normalize(x: torch.Tensor, dim: int = -1, eps: float = 0.0) -> torch.Tensor:
    """Scale ``x`` so that the mean of ``|x|^2`` along ``dim`` is 1."""
    power = x.abs().pow(2).mean(dim=dim, keepdim=True)
    if eps == 0 and torch.any(power == 0):
        raise ValueError("cannot power-normalize an all-zero vector")
    return x / torch.sqrt(power + eps)


def real_to_complex(v: torch.Tensor) -> torch.Tensor:
    """Pair consecutive reals along the last axis: ``(v[2i], v[2i+1]) -> v[2i] + j v[2i+1]``."""
    if v.shape[-1] % 2:
        raise ValueError(f"last dimension must be even, got {v.shape[-1]}")
    pairs = v.reshape(v.shape[:-1] + (v.shape[-1] // 2, 2))
    return torch.complex(pairs[..., 0].contiguous(), pairs[..., 1].contiguous())


def complex_to_real(z: torch.Tensor) -> torch.Tensor:
    return torch.view_as_real(z).reshape(z.shape[:-1] + (2 * z.shape[-1],))


def measured_snr_db(channel: ChannelRealization, X: torch.Tensor, Y: torch.Tensor) -> float:
    """Post-hoc SNR of a generated block, pooled over all leading batch dims.

    Uses the same per-receive-dimension convention as :func:`calibrate_noise`.
    """
    H = channel.H.to(X.dtype)
    noise = (Y - H @ X).abs().pow(2).sum().item()
    signal = (H.abs().pow(2).sum(dim=-2) * X.abs().pow(2).sum(dim=-1)).sum().item()
    return 10.0 * math.log10(signal / noise)
