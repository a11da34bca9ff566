"""Schema-validated experiment configuration (single JSON document)."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..transceivers import IRConfig, LinkConfig, MTConfig, VQAConfig
from ..training import PhaseConfig

DEFAULT_SNR_GRID = [-6.0, -3.0, 0.0, 3.0, 6.0, 9.0, 12.0, 18.0]
MODEL_TYPES = {"ir": IRConfig, "mt": MTConfig, "vqa": VQAConfig}
DATASET_KEYS = {
    "ir": {"num_classes", "per_class", "image_size", "seed"},
    "mt": {"num_pairs", "max_len", "seed", "min_len", "num_words", "window", "test_fraction", "grammar_seed"},
    "vqa": {"num_scenes", "questions_per_scene", "grid", "seed", "cell", "min_objects", "max_objects", "test_fraction"},
}
PHASES = {"ir": ("semantic", "jsc"), "mt": ("semantic", "jsc", "whole"), "vqa": ("semantic", "jsc", "whole")}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChannelSettings(_Strict):
    model: Literal["awgn", "rayleigh", "rician"] = "rician"
    M: int = Field(4, ge=1)
    K: int = Field(2, ge=1)
    rician_r: float = Field(2.0, ge=0)
    sigma_e_sq: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _check(self):
        self.link()  # raises on an inconsistent antenna setup
        return self

    def link(self, **overrides) -> LinkConfig:
        return LinkConfig(**{**self.model_dump(), **overrides})


class PhaseSettings(_Strict):
    lr: float = Field(1e-3, gt=0)
    betas: tuple[float, float] = (0.9, 0.999)
    weight_decay: float = Field(0.0, ge=0)
    batch_size: int = Field(64, ge=2)
    epochs: int = Field(10, ge=0)
    margin: float = 0.5
    snr_range_db: tuple[float, float] = (0.0, 18.0)
    warmup_steps: int = Field(0, ge=0)
    clip_norm: float | None = 1.0
    freeze_image_encoder: bool = False

    def phase_config(self, seed: int) -> PhaseConfig:
        return PhaseConfig(**self.model_dump(), seed=seed)


class BaselineSettings(_Strict):
    enabled: bool = False
    scheme: Literal["bpsk", "qpsk", "8qam"] = "qpsk"
    interleaver_seed: int | None = 0


class ExperimentConfig(_Strict):
    task: Literal["ir", "mt", "vqa"]
    model: dict[str, Any] = Field(default_factory=dict)
    channel: ChannelSettings = Field(default_factory=ChannelSettings)
    snr_db: list[float] = Field(default_factory=lambda: list(DEFAULT_SNR_GRID))
    csi: list[float] = Field(default_factory=lambda: [0.0, 0.025])
    users: list[int] = Field(default_factory=lambda: [1, 2, 4])
    user_snr_db: float = 18.0
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2])
    dataset: dict[str, Any] = Field(default_factory=dict)
    train: dict[str, PhaseSettings] = Field(default_factory=dict)
    augment: bool = True
    baseline: BaselineSettings = Field(default_factory=BaselineSettings)
    eval_limit: int | None = Field(None, ge=1)
    record_wall_time: bool = False
    out_dir: str = "runs/default"

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, v):
        if not v:
            raise ValueError("at least one seed is required")
        return v

    @field_validator("csi")
    @classmethod
    def _csi(cls, v):
        if any(s < 0 for s in v):
            raise ValueError("CSI error variances must be nonnegative")
        return v

    @model_validator(mode="after")
    def _check_sections(self):
        known = {f.name for f in dataclasses.fields(MODEL_TYPES[self.task])}
        unknown = set(self.model) - known
        if unknown:
            raise ValueError(f"unknown model keys for task {self.task}: {sorted(unknown)}")
        unknown = set(self.dataset) - DATASET_KEYS[self.task]
        if unknown:
            raise ValueError(f"unknown dataset keys for task {self.task}: {sorted(unknown)}")
        unknown = set(self.train) - set(PHASES[self.task])
        if unknown:
            raise ValueError(f"unknown training phases for task {self.task}: {sorted(unknown)}")
        self.model_config_obj()
        return self

    def model_config_obj(self):
        return MODEL_TYPES[self.task](**self.model)

    def phase(self, name: str) -> PhaseSettings | None:
        return self.train.get(name)

    def training_hash(self) -> str:
        """Digest of everything that determines trained weights (seed excluded)."""
        keys = ("task", "model", "channel", "dataset", "train", "augment")
        blob = json.dumps(self.model_dump(mode="json", include=set(keys)), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.model_validate_json(Path(path).read_text())

    def dump(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
        return path


def desk_config(task: str, **overrides) -> ExperimentConfig:
    """Small configurations that train on one CPU core in minutes."""
    if task == "ir":
        base = dict(
            model=dict(image_size=32, patch_size=8, d_model=64, heads=4, d_ff=128, layers=2, dropout=0.1,
                       L_C=24, jsc_hidden=[256]),
            dataset=dict(num_classes=16, per_class=64, image_size=32, seed=0),
            train=dict(semantic=PhaseSettings(lr=1e-3, weight_decay=5e-4, epochs=30),
                       jsc=PhaseSettings(lr=1e-3, epochs=100)),
        )
    elif task == "mt":
        base = dict(
            model=dict(src_vocab=27, tgt_vocab=27, max_len=10, d_model=64, heads=4, d_ff=128, enc_layers=2,
                       dec_layers=2, dropout=0.1, L_C=16, jsc_hidden=[128]),
            dataset=dict(num_pairs=2000, max_len=10, seed=0),
            train=dict(semantic=PhaseSettings(lr=1e-3, betas=(0.9, 0.98), epochs=50),
                       jsc=PhaseSettings(lr=1e-3, epochs=40),
                       whole=PhaseSettings(lr=1e-4, betas=(0.9, 0.98), epochs=10)),
        )
    elif task == "vqa":
        base = dict(
            model=dict(image_size=24, patch_size=8, d_img=48, img_layers=2, vocab=21, max_question_len=6,
                       d_model=64, txt_layers=2, heads=4, d_ff=128, fusion_layers=2, fusion_hidden=128,
                       num_answers=15, dropout=0.0, L_C_img=16, L_C_txt=24, jsc_hidden=[128]),
            dataset=dict(num_scenes=2000, questions_per_scene=3, seed=0),
            train=dict(semantic=PhaseSettings(lr=3e-4, betas=(0.9, 0.98), epochs=60),
                       jsc=PhaseSettings(lr=1e-3, batch_size=128, epochs=40),
                       whole=PhaseSettings(lr=1e-4, betas=(0.9, 0.98), epochs=10)),
        )
    else:
        raise ValueError(f"unknown task {task!r}")
    merged = {"task": task, **base}
    for k, v in overrides.items():
        if isinstance(v, dict) and isinstance(merged.get(k), dict):
            merged[k] = {**merged[k], **v}
        else:
            merged[k] = v
    return ExperimentConfig.model_validate(merged)
