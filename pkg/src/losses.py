"""Adversarial, cycle-consistency and pixel-wise objectives and their weighted total

All functions accept tensors (differentiable) or arrays and return 0-dim tensors.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch

from .errors import DomainError, NumericFaultError, ShapeError
from .models.losses import GanForm, LossReport, LossWeights, Regime
from .models.phantom import GrayImage, SegMask

type Grid = torch.Tensor | np.ndarray | GrayImage | SegMask


def _tensor(x: Grid) -> torch.Tensor:
    if isinstance(x, GrayImage | SegMask):
        x = x.values
    if isinstance(x, np.ndarray):
        return torch.as_tensor(x, dtype=torch.float64)
    return x


def _same_shape(a: torch.Tensor, b: torch.Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")


def _check_open_unit(name: str, scores: torch.Tensor) -> None:
    if not ((scores > 0) & (scores < 1)).all():
        raise DomainError(f"log-form {name} scores must lie strictly inside (0, 1)")


def adversarial_loss(d_real: Grid, d_fake: Grid, form: GanForm = GanForm.LEAST_SQUARES) -> torch.Tensor:
    """Discriminator-side adversarial value

    log: mean log D(real) + mean log(1 - D(fake)), maximized by D (supremum 0).
    least_squares: mean (D(real) - 1)^2 + mean D(fake)^2, minimized by D.
    """
    real, fake = _tensor(d_real), _tensor(d_fake)
    _same_shape(real, fake)
    if form == GanForm.LOG:
        _check_open_unit("real", real)
        _check_open_unit("fake", fake)
        return torch.log(real).mean() + torch.log1p(-fake).mean()
    return ((real - 1.0) ** 2).mean() + (fake**2).mean()


def discriminator_objective(d_real: Grid, d_fake: Grid, form: GanForm) -> torch.Tensor:
    """The quantity a discriminator minimizes"""
    value = adversarial_loss(d_real, d_fake, form)
    return -value if form == GanForm.LOG else value


def generator_adversarial_loss(d_fake: Grid, form: GanForm = GanForm.LEAST_SQUARES) -> torch.Tensor:
    """Generator-side term: log form mean log(1 - D(G)), least squares mean (D(G) - 1)^2"""
    fake = _tensor(d_fake)
    if form == GanForm.LOG:
        _check_open_unit("fake", fake)
        return torch.log1p(-fake).mean()
    return ((fake - 1.0) ** 2).mean()


def squash(scores: torch.Tensor, form: GanForm) -> torch.Tensor:
    """Map raw discriminator scores into (0, 1) when the log form is used"""
    if form != GanForm.LOG:
        return scores
    eps = torch.finfo(scores.dtype).eps
    return torch.sigmoid(scores).clamp(eps, 1 - eps)


def cycle_loss(original: Grid, cycled: Grid) -> torch.Tensor:
    """Mean absolute per-pixel difference"""
    a, b = _tensor(original), _tensor(cycled)
    _same_shape(a, b)
    return (a - b).abs().mean()


def pixelwise_loss(pred: Grid, gt: Grid) -> torch.Tensor:
    """Mean squared per-pixel difference"""
    a, b = _tensor(pred), _tensor(gt)
    _same_shape(a, b)
    return ((a - b) ** 2).mean()


@dataclass
class LossParts:
    """Unweighted loss terms; unused terms stay None"""

    adv_forward: torch.Tensor | float | None = None
    adv_backward: torch.Tensor | float | None = None
    cyc: torch.Tensor | float | None = None
    pix: torch.Tensor | float | None = None

    def active(self, regime: Regime) -> dict[str, torch.Tensor | float]:
        """Terms that enter the objective of ``regime``"""
        names = {
            Regime.SPCGAN: ("adv_forward", "adv_backward", "cyc", "pix"),
            Regime.GAN_PIX: ("adv_forward", "pix"),
            Regime.FCN: ("pix",),
        }[regime]
        return {n: getattr(self, n) for n in names if getattr(self, n) is not None}


def _check_finite(name: str, value: torch.Tensor | float) -> None:
    v = float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
    if not math.isfinite(v):
        raise NumericFaultError(f"loss term {name} is not finite ({v})")


def combine(parts: LossParts, weights: LossWeights, regime: Regime) -> torch.Tensor | float:
    """Weighted total of the regime's terms (differentiable when parts are tensors)"""
    scale = {"adv_forward": 1.0, "adv_backward": 1.0, "cyc": weights.lambda_cyc, "pix": weights.lambda_pix}
    total: torch.Tensor | float = 0.0
    for name, value in parts.active(regime).items():
        _check_finite(name, value)
        total = total + scale[name] * value
    return total


def total_objective(parts: LossParts, weights: LossWeights, regime: Regime = Regime.SPCGAN) -> LossReport:
    """Weighted total as a report; terms outside the regime are reported as 0"""
    active = parts.active(regime)
    for name, value in active.items():
        _check_finite(name, value)
    values = {
        name: float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
        for name, value in active.items()
    }
    adv_f = values.get("adv_forward", 0.0)
    adv_b = values.get("adv_backward", 0.0)
    cyc = values.get("cyc", 0.0)
    pix = values.get("pix", 0.0)
    return LossReport(
        adv_forward=adv_f,
        adv_backward=adv_b,
        cyc=cyc,
        pix=pix,
        total=adv_f + adv_b + weights.lambda_cyc * cyc + weights.lambda_pix * pix,
        lambda_cyc=weights.lambda_cyc,
        lambda_pix=weights.lambda_pix,
    )
