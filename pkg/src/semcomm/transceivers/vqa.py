"""VQA transceiver: an image user and a text user feeding one joint receiver.

The receiver runs a layer-wise Transformer (decoder layer ``i`` attends to
encoder layer ``i``'s output) over the recovered text and image tokens, then
fuses the two CLS descriptors into an answer distribution.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from ..layers import DecoderLayer, DenseStack, EncoderLayer, LayerSpec, PatchEmbedding, TextEmbedding, TransformerEncoder
from .jsc import JSCDecoder, JSCEncoder
from .link import LinkConfig, mimo_link, stack_users, unstack_users


@dataclass
class VQAConfig:
    image_size: int = 24
    patch_size: int = 8
    channels: int = 3
    d_img: int = 96
    img_layers: int = 2
    vocab: int = 32
    max_question_len: int = 8
    d_model: int = 128
    txt_layers: int = 2
    heads: int = 4
    d_ff: int = 256
    fusion_layers: int = 4
    layerwise: bool = True
    fusion_hidden: int = 256
    fusion_combine: str = "sum"
    num_answers: int = 16
    dropout: float = 0.1
    L_C_img: int = 32
    L_C_txt: int = 32
    jsc_hidden: list[int] = field(default_factory=lambda: [256])
    jsc_dropout: float = 0.0

    @property
    def image_tokens(self) -> int:
        return (self.image_size // self.patch_size) ** 2 + 1

    @property
    def text_tokens(self) -> int:
        return self.max_question_len + 1

    @property
    def symbols_per_image(self) -> int:
        return self.image_tokens * self.L_C_img

    @property
    def symbols_per_question(self) -> int:
        return self.text_tokens * self.L_C_txt


@dataclass
class FusionTrace:
    text_cls: torch.Tensor
    image_cls: torch.Tensor
    encoder_outputs: list[torch.Tensor]
    decoder_outputs: list[torch.Tensor]
    guided_attention: list[torch.Tensor]


class LayerwiseTransformer(nn.Module):
    """Encoder over text tokens, decoder over image tokens.

    With ``layerwise=True`` decoder layer ``i`` uses encoder layer ``i``'s
    output as keys/values; otherwise every decoder layer uses the final
    encoder output (the classic wiring).
    """

    def __init__(self, d_model: int, heads: int, d_ff: int, layers: int, dropout: float = 0.1,
                 layerwise: bool = True, dec_layers: int | None = None):
        super().__init__()
        dec_layers = layers if dec_layers is None else dec_layers
        if dec_layers != layers:
            raise ValueError(f"encoder/decoder depth mismatch: {layers} vs {dec_layers}")
        self.layerwise = layerwise
        self.enc = nn.ModuleList(EncoderLayer(d_model, heads, d_ff, dropout) for _ in range(layers))
        self.dec = nn.ModuleList(DecoderLayer(d_model, heads, d_ff, dropout) for _ in range(dec_layers))
        self.enc_norm = nn.LayerNorm(d_model)
        self.dec_norm = nn.LayerNorm(d_model)

    def forward(self, text: torch.Tensor, image: torch.Tensor, text_mask=None,
                memory_override: dict[int, torch.Tensor] | None = None) -> FusionTrace:
        """``memory_override[i]`` replaces encoder layer ``i``'s output as seen by the decoder only."""
        enc_outs = []
        h = text
        for layer in self.enc:
            h, _ = layer(h, text_mask)
            enc_outs.append(h)
        memories = list(enc_outs) if self.layerwise else [enc_outs[-1]] * len(self.dec)
        for i, t in (memory_override or {}).items():
            if self.layerwise:
                memories[i] = t
            elif i == len(enc_outs) - 1:
                memories = [t] * len(self.dec)
        dec_outs, maps = [], []
        g = image
        for layer, mem in zip(self.dec, memories):
            g, _, w = layer(g, mem, memory_mask=text_mask)
            dec_outs.append(g)
            maps.append(w)
        return FusionTrace(self.enc_norm(h)[:, 0], self.dec_norm(g)[:, 0], enc_outs, dec_outs, maps)


class InformationFusion(nn.Module):
    """Project both CLS vectors, combine, then an MLP head with dropout."""

    def __init__(self, d_model: int, hidden: int, num_answers: int, dropout: float = 0.1, combine: str = "sum"):
        super().__init__()
        if combine not in ("sum", "concat"):
            raise ValueError(f"unknown combine rule {combine!r}")
        self.d_model = d_model
        self.combine = combine
        self.text_proj = nn.Linear(d_model, d_model)
        self.image_proj = nn.Linear(d_model, d_model)
        width = d_model if combine == "sum" else 2 * d_model
        self.head = DenseStack(width, [LayerSpec(hidden, "elu", dropout), LayerSpec(num_answers, "linear", dropout)])

    def logits(self, text_cls, image_cls):
        if text_cls.shape[-1] != self.d_model or image_cls.shape[-1] != self.d_model:
            raise ValueError(f"CLS vectors must have width {self.d_model}")
        a, b = self.text_proj(text_cls), self.image_proj(image_cls)
        return self.head(a + b if self.combine == "sum" else torch.cat([a, b], dim=-1))

    def forward(self, text_cls, image_cls):
        return torch.softmax(self.logits(text_cls, image_cls), dim=-1)


class VQATransceiver(nn.Module):
    def __init__(self, cfg: VQAConfig):
        super().__init__()
        self.cfg = cfg
        self.img_embed = PatchEmbedding(cfg.image_size, cfg.patch_size, cfg.channels, cfg.d_img)
        self.img_encoder = TransformerEncoder(cfg.d_img, cfg.heads, cfg.d_ff, cfg.img_layers, cfg.dropout)
        self.txt_embed = TextEmbedding(cfg.vocab, cfg.d_model, cfg.max_question_len, cls=True)
        self.txt_encoder = TransformerEncoder(cfg.d_model, cfg.heads, cfg.d_ff, cfg.txt_layers, cfg.dropout)
        hid = cfg.jsc_hidden
        self.img_jsc_enc = JSCEncoder(cfg.d_img, cfg.L_C_img, hid, dropout=cfg.jsc_dropout)
        self.img_jsc_dec = JSCDecoder(cfg.d_img, cfg.L_C_img, list(reversed(hid)), dropout=cfg.jsc_dropout)
        self.txt_jsc_enc = JSCEncoder(cfg.d_model, cfg.L_C_txt, hid, dropout=cfg.jsc_dropout)
        self.txt_jsc_dec = JSCDecoder(cfg.d_model, cfg.L_C_txt, list(reversed(hid)), dropout=cfg.jsc_dropout)
        self.dim_increase = DenseStack(cfg.d_img, [LayerSpec(cfg.d_model, "elu", cfg.dropout),
                                                   LayerSpec(cfg.d_model, "elu", cfg.dropout)])
        self.fusion_tf = LayerwiseTransformer(cfg.d_model, cfg.heads, cfg.d_ff, cfg.fusion_layers, cfg.dropout,
                                              cfg.layerwise)
        self.fusion = InformationFusion(cfg.d_model, cfg.fusion_hidden, cfg.num_answers, cfg.dropout,
                                        cfg.fusion_combine)

    # parameter groups for the training phases
    def image_encoder_modules(self) -> list[nn.Module]:
        return [self.img_embed, self.img_encoder]

    def semantic_modules(self) -> list[nn.Module]:
        return [self.img_embed, self.img_encoder, self.txt_embed, self.txt_encoder,
                self.dim_increase, self.fusion_tf, self.fusion]

    def jsc_modules(self) -> list[nn.Module]:
        return [self.img_jsc_enc, self.img_jsc_dec, self.txt_jsc_enc, self.txt_jsc_dec]

    def image_semantic(self, images: torch.Tensor) -> torch.Tensor:
        """All image token rows ``(B, HW/p^2 + 1, d_img)``."""
        seq = self.img_embed(images)
        out, _, _ = self.img_encoder(seq.tokens, seq.mask)
        return out

    def text_semantic(self, question: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        seq = self.txt_embed(question)
        out, _, _ = self.txt_encoder(seq.tokens, seq.mask)
        return out * seq.mask.unsqueeze(-1), seq.mask

    def recover(self, z_img, z_txt, link: LinkConfig | None, snr_db: float | None, rng, per_block: bool = True,
                text_mask=None):
        """JSC-code both users' semantic rows, share one channel use, decode.

        The image user is stream 0 and the text user stream 1 of a two-user
        block; with ``snr_db=None`` the JSC codecs run without a channel.
        Question rows outside ``text_mask`` are sent as silence.
        """
        x_img = self.img_jsc_enc(z_img)
        x_txt = self.txt_jsc_enc(z_txt)
        if text_mask is not None:
            x_txt = x_txt * text_mask.unsqueeze(-1).to(x_txt.dtype)
        if link is not None and snr_db is not None:
            B, Ti, Li = x_img.shape
            _, Tt, Lt = x_txt.shape
            X, lengths = stack_users([x_img.reshape(B, Ti * Li), x_txt.reshape(B, Tt * Lt)])
            X = _fill_users(X, link.K)
            X_hat = mimo_link(X, link, snr_db, rng, per_block)
            a, b = unstack_users(X_hat[:, :2], lengths)
            x_img, x_txt = a.reshape(B, Ti, Li), b.reshape(B, Tt, Lt)
        return self.img_jsc_dec(x_img), self.txt_jsc_dec(x_txt)

    def dimension_increase(self, z_img_hat: torch.Tensor) -> torch.Tensor:
        return self.dim_increase(z_img_hat)

    def joint_decode(self, z_img_hat, z_txt_hat, text_mask, memory_override=None) -> tuple[torch.Tensor, FusionTrace]:
        trace = self.fusion_tf(z_txt_hat, self.dimension_increase(z_img_hat), text_mask, memory_override)
        return self.fusion.logits(trace.text_cls, trace.image_cls), trace

    def forward(self, images, question, link=None, snr_db=None, rng=None, use_jsc: bool | None = None,
                per_block: bool = True) -> torch.Tensor:
        """Answer logits. JSC codecs are used when a link is given or ``use_jsc`` is set."""
        z_img = self.image_semantic(images)
        z_txt, mask = self.text_semantic(question)
        if use_jsc or (use_jsc is None and link is not None):
            z_img, z_txt = self.recover(z_img, z_txt, link, snr_db, rng, per_block, mask)
        logits, _ = self.joint_decode(z_img, z_txt, mask)
        return logits


def _fill_users(X: torch.Tensor, K: int) -> torch.Tensor:
    """Pad a two-user block up to K streams by repeating the pair (extra pairs are interference)."""
    if X.shape[-2] == K:
        return X
    if K < X.shape[-2]:
        raise ValueError(f"link has K={K} users but {X.shape[-2]} streams are required")
    reps = [X[:, k % 2] for k in range(K)]
    # extra pairs carry the same sample rolled across the batch
    for k in range(2, K):
        reps[k] = torch.roll(reps[k], shifts=k // 2, dims=0)
    return torch.stack(reps, dim=1)
