"""Pydantic models for evaluation records, reports and sweeps"""

from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .losses import Regime
from .netzoo import Backbone

ALL_CLASSES = "all"


class DiceRecord(BaseModel):
    sample_id: str
    method: str
    dsc: float = Field(ge=0, le=1)
    lesion_class: str
    empty_agreement: bool = False  # both masks empty, DSC set to 1 by convention


class GroupStat(BaseModel):
    method: str
    lesion_class: str  # benign, malignant or "all"
    mean: float
    std: float
    n: int = Field(ge=1)
    singleton: bool = False


class TTestResult(BaseModel):
    method_a: str
    method_b: str
    t: float
    p: float
    alpha: float = 0.05
    n: int = 0
    degenerate: bool = False

    @property
    def reject(self) -> bool:
        return not self.degenerate and self.p < self.alpha


class EvalReport(BaseModel):
    records: list[DiceRecord] = Field(default_factory=list)
    group_stats: list[GroupStat] = Field(default_factory=list)
    tests: list[TTestResult] = Field(default_factory=list)

    @model_validator(mode="after")
    def _consistent(self) -> Self:
        for g in self.group_stats:
            n = sum(
                1
                for r in self.records
                if r.method == g.method
                and (g.lesion_class == ALL_CLASSES or r.lesion_class == g.lesion_class)
            )
            if n != g.n:
                raise ValueError(f"group ({g.method}, {g.lesion_class}) has n={g.n}, records={n}")
            if not 0.0 <= g.mean <= 1.0:
                raise ValueError(f"group ({g.method}, {g.lesion_class}) mean outside [0, 1]")
        return self

    def methods(self) -> list[str]:
        return sorted({r.method for r in self.records})

    def group(self, method: str, lesion_class: str = ALL_CLASSES) -> GroupStat | None:
        return next(
            (g for g in self.group_stats if g.method == method and g.lesion_class == lesion_class),
            None,
        )


class SweepSpec(BaseModel):
    """Learning-curve sweep: every (size, regime, seed) cell is one training run"""

    model_config = ConfigDict(extra="forbid")

    training_sizes: list[int] = Field(default_factory=lambda: [8, 16, 32])
    regimes: list[Regime] = Field(default_factory=lambda: [Regime.SPCGAN, Regime.FCN])
    backbone: Backbone = Backbone.RESNET9
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2])

    @model_validator(mode="after")
    def _check(self) -> Self:
        if not self.training_sizes or any(s < 1 for s in self.training_sizes):
            raise ValueError("training_sizes must be positive")
        if not self.regimes or not self.seeds:
            raise ValueError("regimes and seeds must be non-empty")
        return self


class SweepRow(BaseModel):
    size: int
    regime: str
    seed: int
    mean_dsc: float
    std_dsc: float
    n_test: int
