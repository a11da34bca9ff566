"""Neural joint source-channel codecs.

The encoder maps each semantic row (width ``L_S``) to ``L_C`` unit-power
complex symbols; the decoder maps ``2 * L_C`` reals back to width ``L_S``.
Token sequences are coded row-wise with shared weights.
"""
from __future__ import annotations

from typing import Sequence

import torch
from torch import nn

from ..channel import complex_to_real, power_normalize, real_to_complex
from ..layers import DenseStack, LayerSpec


def _stack(in_dim: int, hidden: Sequence[int], out_dim: int, activation: str, dropout: float) -> DenseStack:
    specs = [LayerSpec(h, activation, dropout if i else 0.0) for i, h in enumerate(hidden)]
    specs.append(LayerSpec(out_dim, "linear", dropout if hidden else 0.0))
    return DenseStack(in_dim, specs)


class JSCEncoder(nn.Module):
    def __init__(self, L_S: int, L_C: int, hidden: Sequence[int] = (), activation: str = "relu", dropout: float = 0.0):
        super().__init__()
        if not 0 < L_C < L_S / 2:
            raise ValueError(f"JSC encoder must compress: need 0 < L_C < L_S/2, got L_C={L_C}, L_S={L_S}")
        self.L_S, self.L_C = L_S, L_C
        self.net = _stack(L_S, hidden, 2 * L_C, activation, dropout)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        """``(..., L_S)`` real -> ``(..., L_C)`` complex, each row with unit mean power."""
        return power_normalize(real_to_complex(self.net(z)), eps=1e-12)


class JSCDecoder(nn.Module):
    def __init__(self, L_S: int, L_C: int, hidden: Sequence[int] = (), activation: str = "relu", dropout: float = 0.0):
        super().__init__()
        self.L_S, self.L_C = L_S, L_C
        self.net = _stack(2 * L_C, hidden, L_S, activation, dropout)

    def forward(self, x_hat: torch.Tensor) -> torch.Tensor:
        if x_hat.shape[-1] != self.L_C:
            raise ValueError(f"expected {self.L_C} symbols per row, got {x_hat.shape[-1]}")
        return self.net(complex_to_real(x_hat).to(self.net.linears()[0].weight.dtype))
