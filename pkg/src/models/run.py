"""Run configuration consumed by the CLI"""

from pathlib import Path
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .evalstat import SweepSpec
from .gac import LevelSetSection
from .losses import Regime
from .netzoo import Backbone
from .phantom import PhantomSpec
from .trainer import TrainConfig


class DataSection(BaseModel):
    """Synthetic dataset: phantom parameters, split sizes and preprocessing"""

    model_config = ConfigDict(extra="forbid")

    phantom: PhantomSpec = Field(default_factory=PhantomSpec)
    n_total: int = Field(default=64, ge=1)
    # train / val / test, scaled down from 399 / 100 / 141
    split: tuple[int, int, int] = (40, 10, 14)
    n_external: int = Field(default=0, ge=0)
    external_phantom: PhantomSpec = Field(default_factory=lambda: PhantomSpec.preset("vendor_b"))
    target_spacing: float = Field(default=0.1, gt=0)
    roi_size: int = Field(default=64, ge=1)

    @model_validator(mode="after")
    def _check_split(self) -> Self:
        if any(n < 0 for n in self.split):
            raise ValueError(f"split sizes must be non-negative, got {self.split}")
        if sum(self.split) > self.n_total:
            raise ValueError(f"split {self.split} exceeds n_total={self.n_total}")
        if self.split[0] < 1:
            raise ValueError("the train split needs at least one sample")
        return self


class EvalSection(BaseModel):
    """Methods to score (name -> directory of predicted masks) and comparisons"""

    model_config = ConfigDict(extra="forbid")

    methods: dict[str, Path] = Field(default_factory=dict)
    comparisons: list[tuple[str, str]] = Field(default_factory=list)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    test_manifest: Path | None = None


class RunConfig(BaseModel):
    """Top-level configuration file; unknown keys are rejected"""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    out_dir: Path = Path("runs/default")
    data: DataSection = Field(default_factory=DataSection)
    train: TrainConfig = Field(default_factory=TrainConfig)
    regimes: list[Regime] = Field(default_factory=lambda: [Regime.SPCGAN, Regime.GAN_PIX, Regime.FCN])
    # generator backbones to compare; empty means train.generator.backbone only
    backbones: list[Backbone] = Field(default_factory=list)
    levelset: LevelSetSection = Field(default_factory=LevelSetSection)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    eval: EvalSection = Field(default_factory=EvalSection)

    def backbone_list(self) -> list[Backbone]:
        return list(dict.fromkeys(self.backbones)) or [self.train.generator.backbone]

    @property
    def data_dir(self) -> Path:
        return self.out_dir / "data"

    def manifest_path(self, split: str) -> Path:
        return self.data_dir / split / "manifest.json"
