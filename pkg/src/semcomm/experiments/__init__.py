"""Configuration, persistence, sweeps, accounting and the command line."""
from .accounting import account_ops, account_symbols, dense_ops, format_table, viterbi_ops
from .checkpoint import ConfigHashWarning, load_checkpoint, load_model, save_checkpoint, save_model
from .config import ExperimentConfig, PhaseSettings, desk_config
from .runner import (
    METRICS,
    MissingCheckpoint,
    build_dataset,
    build_model,
    evaluate,
    evaluate_baseline,
    load_trained,
    train_and_save,
    train_model,
)
from .sweep import COLUMNS, SweepRecord, read_records, run_sweep, run_user_sweep, run_wiring_ablation, summarize

__all__ = [
    "account_ops", "account_symbols", "dense_ops", "format_table", "viterbi_ops", "ConfigHashWarning",
    "load_checkpoint", "load_model", "save_checkpoint", "save_model", "ExperimentConfig", "PhaseSettings",
    "desk_config", "METRICS", "MissingCheckpoint", "build_dataset", "build_model", "evaluate", "evaluate_baseline",
    "load_trained", "train_and_save", "train_model", "COLUMNS", "SweepRecord", "read_records", "run_sweep",
    "run_user_sweep", "run_wiring_ablation", "summarize",
]
