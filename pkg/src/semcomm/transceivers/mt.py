"""Machine translation transceiver: Transformer encoder at the transmitter,
Transformer decoder over the recovered semantic rows at the receiver."""
from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from ..layers import DecoderLayer, TextEmbedding, TransformerEncoder
from .jsc import JSCDecoder, JSCEncoder
from .link import LinkConfig, through_link

PAD, BOS, EOS = 0, 1, 2
NUM_SPECIAL = 3


@dataclass
class MTConfig:
    src_vocab: int = 32
    tgt_vocab: int = 32
    max_len: int = 12
    d_model: int = 128
    heads: int = 4
    d_ff: int = 256
    enc_layers: int = 4
    dec_layers: int = 4
    dropout: float = 0.1
    L_C: int = 32
    jsc_hidden: list[int] = field(default_factory=lambda: [256])
    jsc_dropout: float = 0.0

    @property
    def symbols_per_sentence(self) -> int:
        return self.max_len * self.L_C


class MTTransceiver(nn.Module):
    def __init__(self, cfg: MTConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_model
        self.src_embed = TextEmbedding(cfg.src_vocab, d, cfg.max_len, cls=False, pad_id=PAD)
        self.encoder = TransformerEncoder(d, cfg.heads, cfg.d_ff, cfg.enc_layers, cfg.dropout)
        self.jsc_enc = JSCEncoder(d, cfg.L_C, cfg.jsc_hidden, dropout=cfg.jsc_dropout)
        self.jsc_dec = JSCDecoder(d, cfg.L_C, list(reversed(cfg.jsc_hidden)), dropout=cfg.jsc_dropout)
        # target side: BOS + max_len tokens (+ EOS as the final prediction)
        self.tgt_embed = TextEmbedding(cfg.tgt_vocab, d, cfg.max_len + 1, cls=False, pad_id=PAD)
        self.decoder = nn.ModuleList(DecoderLayer(d, cfg.heads, cfg.d_ff, cfg.dropout) for _ in range(cfg.dec_layers))
        self.dec_norm = nn.LayerNorm(d)
        self.generator = nn.Linear(d, cfg.tgt_vocab)

    def semantic_modules(self) -> list[nn.Module]:
        return [self.src_embed, self.encoder, self.tgt_embed, self.decoder, self.dec_norm, self.generator]

    def jsc_modules(self) -> list[nn.Module]:
        return [self.jsc_enc, self.jsc_dec]

    def pad_source(self, sentences: list[list[int]]) -> torch.Tensor:
        T = self.cfg.max_len
        out = torch.full((len(sentences), T), PAD, dtype=torch.long)
        for i, s in enumerate(sentences):
            if len(s) > T:
                raise ValueError(f"sentence of length {len(s)} exceeds max_len={T}")
            out[i, : len(s)] = torch.as_tensor(s, dtype=torch.long)
        return out

    def semantic_encode(self, src: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Padded source ids ``(B, T_max)`` -> semantic rows ``(B, T_max, L_S)`` and validity mask.

        Pad rows are zeroed so they carry no gradient into any loss.
        """
        if src.shape[1] > self.cfg.max_len:
            raise ValueError(f"source length {src.shape[1]} exceeds max_len={self.cfg.max_len}")
        seq = self.src_embed(src)
        z, _, _ = self.encoder(seq.tokens, seq.mask)
        return z * seq.mask.unsqueeze(-1), seq.mask

    def jsc_encode(self, z):
        return self.jsc_enc(z)

    def jsc_decode(self, x_hat):
        return self.jsc_dec(x_hat)

    def channel(self, z, link: LinkConfig | None, snr_db: float | None, rng, per_block: bool = True, mask=None):
        """JSC-encode all rows, send each sentence as one user block, JSC-decode.

        Rows outside ``mask`` are silenced (zero symbols) so padding costs no
        transmit power and carries nothing.
        """
        x = self.jsc_encode(z)
        if mask is not None:
            x = x * mask.unsqueeze(-1).to(x.dtype)
        if link is not None and snr_db is not None:
            B, T, L = x.shape
            x = through_link(x.reshape(B, T * L), link, snr_db, rng, per_block).reshape(B, T, L)
        return self.jsc_decode(x)

    def decode_logits(self, z_hat, mask, tgt_in: torch.Tensor) -> torch.Tensor:
        seq = self.tgt_embed(tgt_in, mask=torch.ones_like(tgt_in, dtype=torch.bool))
        h = seq.tokens
        for layer in self.decoder:
            h, _, _ = layer(h, z_hat, memory_mask=mask, causal=True)
        return self.generator(self.dec_norm(h))

    def semantic_decode(self, z_hat, mask, target: torch.Tensor | None = None, mode: str = "teacher_forced",
                        max_len: int | None = None):
        """Teacher-forced logits ``(B, T+1, V)`` or greedy id lists.

        ``target`` is padded target ids without BOS/EOS; teacher forcing feeds
        ``BOS + target`` and the logits predict ``target + EOS``.
        """
        if mode == "teacher_forced":
            if target is None:
                raise ValueError("teacher-forced decoding requires target ids")
            bos = torch.full((target.shape[0], 1), BOS, dtype=torch.long)
            return self.decode_logits(z_hat, mask, torch.cat([bos, target], dim=1))
        if mode != "greedy":
            raise ValueError(f"unknown decode mode {mode!r}")
        return self.greedy(z_hat, mask, max_len or self.cfg.max_len)

    @torch.no_grad()
    def greedy(self, z_hat, mask, max_len: int, return_eos: bool = False):
        """Greedy decoding from BOS; stops at EOS or after ``max_len`` tokens."""
        B = z_hat.shape[0]
        ys = torch.full((B, 1), BOS, dtype=torch.long)
        done = torch.zeros(B, dtype=torch.bool)
        for _ in range(max_len + 1):
            nxt = self.decode_logits(z_hat, mask, ys)[:, -1].argmax(-1)
            nxt = torch.where(done, torch.full_like(nxt, PAD), nxt)
            done |= nxt == EOS
            ys = torch.cat([ys, nxt[:, None]], dim=1)
            if bool(done.all()) or ys.shape[1] > max_len + 1:
                break
        out = []
        for row in ys[:, 1:].tolist():
            sent = []
            for t in row:
                if t in (EOS, PAD):
                    break
                sent.append(t)
            out.append(sent[:max_len])
        return (out, done) if return_eos else out

    def forward(self, src, target=None, link=None, snr_db=None, rng=None, per_block=True):
        z, mask = self.semantic_encode(src)
        z_hat = self.channel(z, link, snr_db, rng, per_block, mask) if link is not None else z
        return self.semantic_decode(z_hat, mask, target, "teacher_forced")

    def translate(self, src, link=None, snr_db=None, rng=None, per_block=True) -> list[list[int]]:
        z, mask = self.semantic_encode(src)
        z_hat = self.channel(z, link, snr_db, rng, per_block, mask) if link is not None else z
        return self.greedy(z_hat, mask, self.cfg.max_len)
