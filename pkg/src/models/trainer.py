"""Training configuration, logs and checkpoints"""

import json
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Self

import pandas as pd
import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .losses import LossWeights, Regime
from .netzoo import DiscriminatorConfig, GeneratorConfig
from .phantom import AugConfig

CHECKPOINT_FORMAT_VERSION = 1


class ValMetric(StrEnum):
    LOSS = "loss"
    DICE = "dice"


class TrainConfig(BaseModel):
    """Complete description of one training run"""

    model_config = ConfigDict(extra="forbid")

    regime: Regime = Regime.SPCGAN
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    forward_discriminator: DiscriminatorConfig = Field(
        default_factory=DiscriminatorConfig.forward_default
    )
    backward_discriminator: DiscriminatorConfig = Field(
        default_factory=DiscriminatorConfig.backward_default
    )
    weights: LossWeights = Field(default_factory=LossWeights)
    epochs: int = Field(default=1500, ge=0)
    batch_size: int = Field(default=1, ge=1)
    lr: float = Field(default=2e-4, gt=0)
    decay_start_epoch: int = Field(default=750, ge=0)
    betas: tuple[float, float] = (0.5, 0.999)
    aug: AugConfig = Field(default_factory=AugConfig)
    seed: int = 0
    pool_size: int = Field(default=50, ge=0)
    val_every: int = Field(default=1, ge=1)
    val_metric: ValMetric = ValMetric.LOSS
    log_every: int = Field(default=10, ge=1)
    prefetch_workers: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_schedule(self) -> Self:
        if self.decay_start_epoch > self.epochs:
            raise ValueError(
                f"decay_start_epoch ({self.decay_start_epoch}) exceeds epochs ({self.epochs})"
            )
        return self

    @property
    def uses_discriminators(self) -> bool:
        return self.regime != Regime.FCN

    @property
    def uses_cycle(self) -> bool:
        return self.regime == Regime.SPCGAN

    def net_names(self) -> list[str]:
        """Networks present in a checkpoint of this regime"""
        if self.regime == Regime.FCN:
            return ["G_AB"]
        if self.regime == Regime.GAN_PIX:
            return ["G_AB", "D_forward"]
        return ["G_AB", "G_BA", "D_forward", "D_backward"]


class ValidationRecord(BaseModel):
    epoch: int
    val_loss: float
    val_dice: float


class IterationRecord(BaseModel):
    iteration: int
    epoch: int
    lr: float
    adv_forward: float
    adv_backward: float
    cyc: float
    pix: float
    total: float


class TrainLog(BaseModel):
    """Per-iteration losses and per-validation scores"""

    iterations: list[IterationRecord] = Field(default_factory=list)
    validations: list[ValidationRecord] = Field(default_factory=list)

    @model_validator(mode="after")
    def _monotone(self) -> Self:
        its = [r.iteration for r in self.iterations]
        if any(b <= a for a, b in zip(its, its[1:], strict=False)):
            raise ValueError("iteration indices must be strictly increasing")
        return self

    def write_csv(self, directory: Path, float_format: str = "%.10g") -> tuple[Path, Path]:
        directory.mkdir(parents=True, exist_ok=True)
        train_path = directory / "train_log.csv"
        val_path = directory / "val_log.csv"
        pd.DataFrame(
            [r.model_dump() for r in self.iterations], columns=list(IterationRecord.model_fields)
        ).to_csv(train_path, index=False, float_format=float_format)
        pd.DataFrame(
            [r.model_dump() for r in self.validations], columns=list(ValidationRecord.model_fields)
        ).to_csv(val_path, index=False, float_format=float_format)
        return train_path, val_path


@dataclass
class Checkpoint:
    """Trained (or initialized) network parameters of one regime"""

    config: TrainConfig
    nets: dict[str, dict[str, torch.Tensor]]
    epoch: int
    val_loss: float | None = None
    input_shape: tuple[int, int] | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [n for n in self.config.net_names() if n not in self.nets]
        if missing:
            raise ValueError(f"checkpoint for regime {self.config.regime} lacks nets {missing}")
        for name, state in self.nets.items():
            for key, tensor in state.items():
                if tensor.is_floating_point() and not torch.isfinite(tensor).all():
                    raise ValueError(f"non-finite parameter {name}.{key}")

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "format_version": CHECKPOINT_FORMAT_VERSION,
                "train_config": self.config.model_dump_json(),
                "nets": self.nets,
                "epoch": self.epoch,
                "val_loss": self.val_loss,
                "input_shape": list(self.input_shape) if self.input_shape else None,
                "extra": json.dumps(self.extra, sort_keys=True),
            },
            path,
        )

    @classmethod
    def load(cls, path: Path) -> "Checkpoint":
        if not path.exists():
            raise FileNotFoundError(f"Checkpoint not found: {path}")
        payload = torch.load(path, map_location="cpu", weights_only=True)
        version = payload.get("format_version")
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version}")
        shape = payload.get("input_shape")
        return cls(
            config=TrainConfig.model_validate_json(payload["train_config"]),
            nets=payload["nets"],
            epoch=payload["epoch"],
            val_loss=payload["val_loss"],
            input_shape=tuple(shape) if shape else None,
            extra=json.loads(payload.get("extra", "{}")),
        )
