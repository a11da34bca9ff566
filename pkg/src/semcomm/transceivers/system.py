"""Multi-user composition: every user encodes, one shared channel use, per-user receivers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import torch
import torch.nn.functional as F
from torch import nn

from .ir import IRTransceiver
from .link import LinkConfig, mimo_link, stack_users, unstack_users
from .mt import MTTransceiver
from .vqa import VQATransceiver


@dataclass
class UserLink:
    """One transmitter and its receiver-side codec.

    ``role`` selects the payload for multimodal models: a VQA transceiver is
    shared by an ``image`` user and a ``text`` user, which must both be present.
    """

    index: int
    model: nn.Module
    role: str = "main"

    @property
    def modality(self) -> str:
        if isinstance(self.model, IRTransceiver):
            return "image"
        if isinstance(self.model, MTTransceiver):
            return "text"
        return self.role


def _encode(user: UserLink, inp) -> tuple[torch.Tensor, dict[str, Any]]:
    m = user.model
    if isinstance(m, IRTransceiver):
        z = m.semantic_encode(inp)
        return m.jsc_encode(z), {"z": z}
    if isinstance(m, MTTransceiver):
        z, mask = m.semantic_encode(inp)
        x = m.jsc_encode(z) * mask.unsqueeze(-1).to(torch.complex64)
        return x, {"z": z, "mask": mask}
    if isinstance(m, VQATransceiver):
        if user.role == "image":
            z = m.image_semantic(inp)
            return m.img_jsc_enc(z), {"z": z}
        if user.role == "text":
            z, mask = m.text_semantic(inp)
            return m.txt_jsc_enc(z) * mask.unsqueeze(-1).to(torch.complex64), {"z": z, "mask": mask}
        raise ValueError(f"VQA users need role 'image' or 'text', got {user.role!r}")
    raise TypeError(f"unsupported transceiver {type(m).__name__}")


def end_to_end(users: list[UserLink], link: LinkConfig | None, inputs: list, snr_db: float | None = None,
               rng=None, per_block: bool = True) -> dict[int, Any]:
    """Run all users through one channel use and return each task's output.

    IR users map to recovered l2-normalized semantic vectors, MT users to
    greedy translations, and each VQA image/text pair to an answer
    distribution keyed by the image user's index. ``link=None`` is the
    channel-free reference (JSC codecs still applied).
    """
    if link is not None and len(users) > link.M:
        raise ValueError(f"{len(users)} users exceed M={link.M} receive antennas")
    if len({u.index for u in users}) != len(users):
        raise ValueError("user indices must be unique")
    payloads, side = [], []
    for u, inp in zip(users, inputs):
        x, info = _encode(u, inp)
        side.append((x.shape, info))
        payloads.append(x.reshape(x.shape[0], -1))
    if link is not None and snr_db is not None:
        if len(users) != link.K:
            raise ValueError(f"link configured for K={link.K}, got {len(users)} users")
        X, lengths = stack_users(payloads)
        payloads = unstack_users(mimo_link(X, link, snr_db, rng, per_block), lengths)
    outputs: dict[int, Any] = {}
    vqa_parts: dict[int, dict] = {}
    for u, x_flat, (shape, info) in zip(users, payloads, side):
        x_hat = x_flat.reshape(shape)
        m = u.model
        if isinstance(m, IRTransceiver):
            outputs[u.index] = F.normalize(m.jsc_decode(x_hat), dim=-1)
        elif isinstance(m, MTTransceiver):
            outputs[u.index] = m.greedy(m.jsc_decode(x_hat), info["mask"], m.cfg.max_len)
        else:
            part = vqa_parts.setdefault(id(m), {"model": m})
            if u.role == "image":
                part["image"] = m.img_jsc_dec(x_hat)
                part["key"] = u.index
            else:
                part["text"] = m.txt_jsc_dec(x_hat)
                part["mask"] = info["mask"]
    for part in vqa_parts.values():
        if "image" not in part or "text" not in part:
            raise ValueError("each VQA transceiver needs both an image and a text user")
        logits, _ = part["model"].joint_decode(part["image"], part["text"], part["mask"])
        outputs[part["key"]] = torch.softmax(logits, dim=-1)
    return outputs
