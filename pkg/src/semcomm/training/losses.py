"""Training objectives."""
from __future__ import annotations

import torch
import torch.nn.functional as F


def loss_ir(z: torch.Tensor, labels: torch.Tensor, margin: float = 0.5) -> torch.Tensor:
    """Pairwise metric-learning loss over all ordered pairs ``i != j`` in the batch.

    Mean of ``1 - z_i.z_j`` over same-label pairs plus mean of
    ``max(z_i.z_j - margin, 0)`` over different-label pairs. Rows of ``z``
    are expected to be l2-normalized.
    """
    labels = torch.as_tensor(labels)
    sim = z @ z.T
    same = labels[:, None] == labels[None, :]
    off_diag = ~torch.eye(len(labels), dtype=torch.bool, device=z.device)
    pos = same & off_diag
    neg = ~same
    if not bool(pos.any()):
        raise ValueError("batch has no positive pair; the retrieval loss is undefined")
    loss = (1.0 - sim[pos]).mean()
    if bool(neg.any()):
        loss = loss + F.relu(sim[neg] - margin).mean()
    return loss


def loss_mse(z: torch.Tensor, z_hat: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
    """Mean over rows of the squared l2 error ``||z_hat - z||^2``; masked rows are skipped."""
    if z.shape != z_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(z.shape)} vs {tuple(z_hat.shape)}")
    sq = (z_hat - z).pow(2).sum(dim=-1)
    if mask is None:
        return sq.mean()
    m = mask.to(sq.dtype)
    return (sq * m).sum() / m.sum().clamp_min(1.0)


def loss_mse_joint(z_img, z_img_hat, z_txt, z_txt_hat, txt_mask=None) -> torch.Tensor:
    """Two-user reconstruction loss: image term plus text term."""
    return loss_mse(z_img, z_img_hat) + loss_mse(z_txt, z_txt_hat, txt_mask)


def loss_ce(logits: torch.Tensor, target: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
    """Mean negative log-likelihood of ``target`` over unmasked positions."""
    V = logits.shape[-1]
    target = torch.as_tensor(target)
    if target.numel() and (int(target.min()) < 0 or int(target.max()) >= V):
        raise ValueError(f"target id outside [0, {V})")
    nll = -torch.log_softmax(logits, dim=-1).gather(-1, target.unsqueeze(-1)).squeeze(-1)
    if mask is None:
        return nll.mean()
    m = mask.to(nll.dtype)
    return (nll * m).sum() / m.sum().clamp_min(1.0)
