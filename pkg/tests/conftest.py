"""Shared fixtures: tiny disk samples and network configs that train in seconds"""

import numpy as np
import pytest
from src.models.netzoo import DiscriminatorConfig, DiscriminatorKind, GeneratorConfig
from src.models.phantom import AugConfig, GrayImage, LesionClass, PairedSample, SegMask
from src.models.trainer import TrainConfig


def disk_sample(
    sample_id: str = "disk-0",
    size: int = 16,
    radius: float = 4.0,
    center: tuple[float, float] | None = None,
    lesion_class: LesionClass = LesionClass.BENIGN,
) -> PairedSample:
    """Dark disk on a bright background"""
    cy, cx = center if center is not None else ((size - 1) / 2, (size - 1) / 2)
    rr, cc = np.indices((size, size))
    inside = np.hypot(rr - cy, cc - cx) <= radius
    return PairedSample(
        id=sample_id,
        image=GrayImage(values=np.where(inside, -0.6, 0.4)),
        mask=SegMask.from_bool(inside),
        lesion_class=lesion_class,
    )


def tiny_train_config(regime: str = "spcgan", epochs: int = 2, **overrides) -> TrainConfig:
    values = {
        "regime": regime,
        "generator": GeneratorConfig(base_width=4, n_res_blocks=1),
        "forward_discriminator": DiscriminatorConfig(
            kind=DiscriminatorKind.PIXELWISE_FORWARD, base_width=4, n_layers=2
        ),
        "backward_discriminator": DiscriminatorConfig(
            kind=DiscriminatorKind.PATCH_BACKWARD, base_width=4, n_layers=2
        ),
        "epochs": epochs,
        "decay_start_epoch": epochs // 2,
        "aug": AugConfig.disabled(),
        "pool_size": 4,
        "log_every": 1,
        "seed": 3,
    }
    values.update(overrides)
    return TrainConfig(**values)


@pytest.fixture
def disks() -> list[PairedSample]:
    return [
        disk_sample("disk-0", radius=3.0, center=(7.0, 7.0)),
        disk_sample("disk-1", radius=4.0, center=(8.0, 7.0), lesion_class=LesionClass.MALIGNANT),
        disk_sample("disk-2", radius=5.0, center=(7.5, 8.0)),
    ]


@pytest.fixture
def tiny_config():
    return tiny_train_config
