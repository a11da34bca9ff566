from .losses import loss_ce, loss_ir, loss_mse, loss_mse_joint
from .schedules import (
    DIVERGENCE_GRAD_NORM,
    JsonlLog,
    LossReport,
    PhaseConfig,
    PhaseOrderError,
    TrainingDiverged,
    images_to_tensor,
    mt_batch,
    train_ir,
    train_ir_jsc,
    train_ir_semantic,
    train_mt,
    train_mt_jsc,
    train_mt_semantic,
    train_mt_whole,
    train_vqa,
    train_vqa_jsc,
    train_vqa_semantic,
    train_vqa_whole,
)

__all__ = [
    "DIVERGENCE_GRAD_NORM", "JsonlLog", "LossReport", "PhaseConfig", "PhaseOrderError", "TrainingDiverged",
    "images_to_tensor", "loss_ce", "loss_ir", "loss_mse", "loss_mse_joint", "mt_batch", "train_ir",
    "train_ir_jsc", "train_ir_semantic", "train_mt", "train_mt_jsc", "train_mt_semantic", "train_mt_whole",
    "train_vqa", "train_vqa_jsc", "train_vqa_semantic", "train_vqa_whole",
]
