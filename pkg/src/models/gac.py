"""Pydantic models for the level-set baseline"""

from enum import StrEnum
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class LevelSetField(BaseModel):
    """Signed level-set function on the pixel grid, negative inside the contour"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray

    @field_validator("values")
    @classmethod
    def _check_values(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2D grid, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("level-set function contains non-finite values")
        return v

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def has_contour(self) -> bool:
        return bool((self.values < 0).any())


class LevelSetParams(BaseModel):
    """Evolution parameters; ``dt=None`` selects 0.9 of the CFL bound per image"""

    model_config = ConfigDict(extra="forbid")

    epsilon: float = Field(default=0.1, ge=0)
    alpha: float = Field(default=50.0, ge=0)
    sigma: float = Field(default=2.0, gt=0)
    dt: float | None = Field(default=None, gt=0)
    steps: int = Field(default=200, gt=0)
    init_radius: float = Field(default=3.0, gt=0)
    reinit_every: int = Field(default=20, ge=1)
    # automatic dt is sized as if epsilon and alpha were at least these values, so
    # parameter sets sharing a step count also share their evolution time
    cfl_epsilon: float = Field(default=0.0, ge=0)
    cfl_alpha: float = Field(default=0.0, ge=0)


class SearchStrategy(StrEnum):
    COORDINATE = "coordinate"
    EXHAUSTIVE = "exhaustive"


class LevelSetGrid(BaseModel):
    """Discretized search space for parameter fitting"""

    model_config = ConfigDict(extra="forbid")

    epsilon: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.3, 1.0])
    alpha: list[float] = Field(default_factory=lambda: [0.0, 10.0, 25.0, 50.0, 100.0])
    steps: list[int] = Field(default_factory=lambda: [50, 100, 200, 400])
    sigma: list[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0])
    dt: float | None = None
    init_radius: float = 3.0

    @model_validator(mode="after")
    def _non_empty(self) -> Self:
        for name in ("epsilon", "alpha", "steps", "sigma"):
            if not getattr(self, name):
                raise ValueError(f"grid axis {name} is empty")
        return self

    def axes(self) -> dict[str, list]:
        """Sorted axis values in tie-break priority order"""
        return {
            "steps": sorted(set(self.steps)),
            "epsilon": sorted(set(self.epsilon)),
            "alpha": sorted(set(self.alpha)),
            "sigma": sorted(set(self.sigma)),
        }

    def size(self) -> int:
        n = 1
        for values in self.axes().values():
            n *= len(values)
        return n


class LevelSetSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid: LevelSetGrid = Field(default_factory=LevelSetGrid)
    strategy: SearchStrategy = SearchStrategy.COORDINATE
    max_rounds: int = Field(default=4, ge=1)
    fit_subset: int | None = Field(default=None, ge=1)
