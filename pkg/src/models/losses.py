"""Pydantic models for loss weighting and reporting"""

import math
from enum import StrEnum
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator


class GanForm(StrEnum):
    LOG = "log"
    LEAST_SQUARES = "least_squares"


class Regime(StrEnum):
    """Training regimes: full model and its two ablations"""

    SPCGAN = "spcgan"  # cycle-GAN + forward pixel-wise loss
    GAN_PIX = "gan_pix"  # forward GAN + pixel-wise loss, no cycle
    FCN = "fcn"  # pixel-wise loss only


class LossWeights(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lambda_cyc: float = Field(default=10.0, ge=0, allow_inf_nan=False)
    lambda_pix: float = Field(default=10.0, ge=0, allow_inf_nan=False)
    gan_form: GanForm = GanForm.LEAST_SQUARES


class LossReport(BaseModel):
    """Scalar loss terms of one evaluation of the objective"""

    adv_forward: float = 0.0
    adv_backward: float = 0.0
    cyc: float = 0.0
    pix: float = 0.0
    total: float = 0.0
    lambda_cyc: float = 10.0
    lambda_pix: float = 10.0

    @model_validator(mode="after")
    def _check_total(self) -> Self:
        expected = (
            self.adv_forward
            + self.adv_backward
            + self.lambda_cyc * self.cyc
            + self.lambda_pix * self.pix
        )
        if not math.isclose(self.total, expected, rel_tol=1e-6, abs_tol=1e-6):
            raise ValueError(f"total {self.total} does not match weighted parts {expected}")
        return self

    def row(self) -> dict[str, float]:
        return {
            "adv_forward": self.adv_forward,
            "adv_backward": self.adv_backward,
            "cyc": self.cyc,
            "pix": self.pix,
            "total": self.total,
        }
