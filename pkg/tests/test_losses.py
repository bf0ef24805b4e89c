"""Tests for adversarial, cycle and pixel-wise objectives"""

import math

import numpy as np
import pytest
import torch
from pydantic import ValidationError
from src.errors import DomainError, NumericFaultError, ShapeError
from src.losses import (
    LossParts,
    adversarial_loss,
    combine,
    cycle_loss,
    discriminator_objective,
    generator_adversarial_loss,
    pixelwise_loss,
    squash,
    total_objective,
)
from src.models.losses import GanForm, LossReport, LossWeights, Regime


def test_least_squares_adversarial_optimum():
    """A perfect discriminator has zero least-squares loss"""
    assert float(adversarial_loss(np.ones((4, 4)), np.zeros((4, 4)))) == 0.0
    assert float(adversarial_loss(np.zeros((4, 4)), np.ones((4, 4)))) == 2.0


def test_log_adversarial_value():
    """Undecided scores give 2 log 0.5; near-perfect scores approach the supremum 0"""
    half = np.full((3, 3), 0.5)
    assert float(adversarial_loss(half, half, GanForm.LOG)) == pytest.approx(2 * math.log(0.5))
    near = float(adversarial_loss(np.full(4, 1 - 1e-6), np.full(4, 1e-6), GanForm.LOG))
    assert near == pytest.approx(-2e-6, abs=1e-9)


def test_log_adversarial_domain():
    """Scores on the boundary of (0, 1) are outside the log form's domain"""
    with pytest.raises(DomainError):
        adversarial_loss(np.zeros(3), np.full(3, 0.5), GanForm.LOG)
    with pytest.raises(DomainError):
        generator_adversarial_loss(np.ones(3), GanForm.LOG)


def test_log_adversarial_rejects_scores_outside_unit_interval():
    """Scores above 1 or below 0 are rejected on both inputs, never a positive value"""
    with pytest.raises(DomainError, match="real"):
        adversarial_loss(np.full(4, 2.0), np.full(4, 0.1), GanForm.LOG)
    with pytest.raises(DomainError, match="fake"):
        adversarial_loss(np.full(4, 0.9), np.full(4, -0.5), GanForm.LOG)
    with pytest.raises(DomainError):
        generator_adversarial_loss(np.full(4, -0.1), GanForm.LOG)
    with pytest.raises(DomainError):
        adversarial_loss(np.full(2, np.nan), np.full(2, 0.5), GanForm.LOG)


def test_log_adversarial_never_positive():
    """Every in-domain evaluation of the log form is at most 0"""
    rng = np.random.default_rng(3)
    for _ in range(50):
        real = rng.uniform(1e-6, 1 - 1e-6, 8)
        fake = rng.uniform(1e-6, 1 - 1e-6, 8)
        assert float(adversarial_loss(real, fake, GanForm.LOG)) <= 1e-9


def test_discriminator_objective_sign():
    """Discriminators minimize the negated log objective and the plain least-squares one"""
    real, fake = np.full(5, 0.7), np.full(5, 0.2)
    assert float(discriminator_objective(real, fake, GanForm.LOG)) == pytest.approx(
        -float(adversarial_loss(real, fake, GanForm.LOG))
    )
    assert float(discriminator_objective(real, fake, GanForm.LEAST_SQUARES)) == pytest.approx(
        float(adversarial_loss(real, fake))
    )


def test_generator_adversarial_loss():
    """Least squares pushes fake scores to 1"""
    assert float(generator_adversarial_loss(np.ones(6))) == 0.0
    assert float(generator_adversarial_loss(np.zeros(6))) == 1.0


def test_squash_only_for_log_form():
    """Raw scores become probabilities for the log form only"""
    x = torch.tensor([0.0, 2.0])
    assert torch.equal(squash(x, GanForm.LEAST_SQUARES), x)
    assert float(squash(x, GanForm.LOG)[0]) == 0.5


def test_squash_stays_inside_unit_interval():
    """Saturated float32 scores are kept strictly inside (0, 1)"""
    probs = squash(torch.tensor([-200.0, 200.0]), GanForm.LOG)
    assert float(probs[0]) > 0.0
    assert float(probs[1]) < 1.0
    assert torch.isfinite(adversarial_loss(probs[1:], probs[:1], GanForm.LOG))


def test_cycle_and_pixel_losses():
    """Mean absolute and mean squared differences"""
    a = np.array([[0.0, 1.0], [-1.0, 0.5]])
    b = np.array([[1.0, 1.0], [1.0, 0.0]])
    assert float(cycle_loss(a, b)) == pytest.approx((1 + 0 + 2 + 0.5) / 4)
    assert float(pixelwise_loss(a, b)) == pytest.approx((1 + 0 + 4 + 0.25) / 4)
    assert float(cycle_loss(a, a)) == 0.0


def test_shape_mismatch():
    """Grids of different shape cannot be compared"""
    with pytest.raises(ShapeError):
        pixelwise_loss(np.zeros((2, 2)), np.zeros((3, 2)))


def test_combine_per_regime():
    """Each regime sums only its own terms"""
    parts = LossParts(adv_forward=1.0, adv_backward=2.0, cyc=0.5, pix=0.25)
    weights = LossWeights(lambda_cyc=10, lambda_pix=4)
    assert combine(parts, weights, Regime.SPCGAN) == pytest.approx(1 + 2 + 5 + 1)
    assert combine(parts, weights, Regime.GAN_PIX) == pytest.approx(1 + 1)
    assert combine(parts, weights, Regime.FCN) == pytest.approx(1)


def test_total_objective_reports_inactive_terms_as_zero():
    """Terms outside the regime are reported as 0 and the total matches"""
    parts = LossParts(adv_forward=1.0, adv_backward=2.0, cyc=0.5, pix=0.25)
    report = total_objective(parts, LossWeights(), Regime.FCN)
    assert report.adv_forward == report.adv_backward == report.cyc == 0.0
    assert report.total == pytest.approx(10 * 0.25)


def test_combine_is_differentiable():
    """The combined total back-propagates into its inputs"""
    pred = torch.zeros(4, requires_grad=True)
    parts = LossParts(pix=pixelwise_loss(pred, torch.ones(4)))
    total = combine(parts, LossWeights(), Regime.FCN)
    total.backward()
    assert pred.grad is not None
    assert torch.all(pred.grad < 0)


def test_non_finite_term_is_named():
    """A non-finite term raises a numeric fault naming it"""
    parts = LossParts(adv_forward=0.1, pix=float("nan"))
    with pytest.raises(NumericFaultError, match="pix"):
        combine(parts, LossWeights(), Regime.GAN_PIX)


def test_loss_report_checks_total():
    """A report whose total disagrees with its parts is rejected"""
    with pytest.raises(ValidationError):
        LossReport(pix=1.0, total=3.0)
