"""Pydantic models for images, masks, phantom generation and datasets"""

from enum import StrEnum
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import ShapeError, SpecValidationError


class LesionClass(StrEnum):
    BENIGN = "benign"
    MALIGNANT = "malignant"


class Provenance(StrEnum):
    SYNTHETIC = "synthetic"
    EXTERNAL = "external"


class Split(StrEnum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"
    EXTERNAL = "external"


class GrayImage(BaseModel):
    """Single-channel image on an isotropic grid, values in [-1, 1]"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray
    spacing: float = Field(default=0.1, gt=0)

    @field_validator("values")
    @classmethod
    def _check_values(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2D grid, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("image contains non-finite values")
        if v.min() < -1.0 or v.max() > 1.0:
            raise ValueError(f"image values outside [-1, 1]: [{v.min()}, {v.max()}]")
        return v

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


class SegMask(BaseModel):
    """Segmentation map in [0, 1]; binarized masks hold only 0 and 1"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray
    binarized: bool = True

    @field_validator("values")
    @classmethod
    def _check_values(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2D grid, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("mask values must lie in [0, 1]")
        return v

    @model_validator(mode="after")
    def _check_binary(self) -> Self:
        if self.binarized and not np.all((self.values == 0.0) | (self.values == 1.0)):
            raise ValueError("binarized mask holds values other than 0 and 1")
        return self

    @classmethod
    def from_bool(cls, arr: np.ndarray) -> "SegMask":
        return cls(values=np.asarray(arr, dtype=bool).astype(np.float64), binarized=True)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def foreground(self) -> int:
        return int(np.count_nonzero(self.values >= 0.5))


class PairedSample(BaseModel):
    """Image, binary ground-truth mask and lesion label"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    id: str
    image: GrayImage
    mask: SegMask
    lesion_class: LesionClass
    provenance: Provenance = Provenance.SYNTHETIC

    @model_validator(mode="after")
    def _check_pairing(self) -> Self:
        if self.image.shape != self.mask.shape:
            raise ShapeError(
                f"sample {self.id}: image {self.image.shape} and mask {self.mask.shape} differ"
            )
        if not self.mask.binarized:
            raise ValueError(f"sample {self.id}: ground-truth mask must be binarized")
        if self.mask.foreground < 1:
            raise ValueError(f"sample {self.id}: mask has no foreground pixel")
        return self


class PhantomSpec(BaseModel):
    """Parameters of the synthetic ultrasound phantom"""

    model_config = ConfigDict(extra="forbid")

    canvas: tuple[int, int] = (96, 96)  # (height, width)
    lesion_radius_range: tuple[float, float] = (7.0, 14.0)
    boundary_blur_sigma: float = 1.5
    shadow_probability: float = 0.4
    shadow_attenuation: float = 0.5
    speckle_grain: float = 1.0
    lesion_contrast: float = 0.6
    depth_attenuation: float = 0.997
    spacing_mm: float = 0.1
    malignant_probability: float = 0.2
    margin_irregularity: float = 0.08
    background_texture: float = 0.15

    @model_validator(mode="after")
    def _check_ranges(self) -> Self:
        h, w = self.canvas
        if h < 8 or w < 8:
            raise SpecValidationError("canvas", f"must be at least 8x8, got {self.canvas}")
        rmin, rmax = self.lesion_radius_range
        if rmin <= 0 or rmax < rmin:
            raise SpecValidationError(
                "lesion_radius_range", f"need 0 < min <= max, got {self.lesion_radius_range}"
            )
        if rmax >= min(h, w) / 2:
            raise SpecValidationError(
                "lesion_radius_range", f"max radius {rmax} must be below {min(h, w) / 2}"
            )
        for name in (
            "shadow_probability",
            "shadow_attenuation",
            "lesion_contrast",
            "malignant_probability",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SpecValidationError(name, f"must lie in [0, 1], got {value}")
        if self.boundary_blur_sigma < 0:
            raise SpecValidationError("boundary_blur_sigma", "must be >= 0")
        if self.speckle_grain <= 0:
            raise SpecValidationError("speckle_grain", "must be > 0")
        if not 0.0 < self.depth_attenuation <= 1.0:
            raise SpecValidationError("depth_attenuation", "must lie in (0, 1]")
        if self.spacing_mm <= 0:
            raise SpecValidationError("spacing_mm", "must be > 0")
        if not 0.0 <= self.margin_irregularity < 0.1:
            raise SpecValidationError("margin_irregularity", "must lie in [0, 0.1)")
        if self.background_texture < 0:
            raise SpecValidationError("background_texture", "must be >= 0")
        return self

    @classmethod
    def preset(cls, name: str) -> "PhantomSpec":
        """Scanner-like parameterizations; ``vendor_b`` is the shifted domain"""
        presets = {
            "vendor_a": {},
            "vendor_b": {
                "speckle_grain": 1.6,
                "lesion_contrast": 0.5,
                "boundary_blur_sigma": 2.0,
                "depth_attenuation": 0.994,
                "background_texture": 0.2,
            },
        }
        if name not in presets:
            raise SpecValidationError("preset", f"unknown preset {name!r}")
        return cls(**presets[name])


class AugConfig(BaseModel):
    """Random geometric augmentation ranges"""

    model_config = ConfigDict(extra="forbid")

    shear_range: float = Field(default=0.2, ge=0)
    rotation_range_deg: float = Field(default=10.0, ge=0)
    width_shift: float = Field(default=0.1, ge=0)
    height_shift: float = Field(default=0.1, ge=0)
    zoom_range: float = Field(default=0.1, ge=0, lt=1)
    horizontal_flip: bool = True
    flip_probability: float = Field(default=0.5, ge=0, le=1)

    @classmethod
    def disabled(cls) -> "AugConfig":
        return cls(
            shear_range=0,
            rotation_range_deg=0,
            width_shift=0,
            height_shift=0,
            zoom_range=0,
            horizontal_flip=False,
        )

    @property
    def is_identity(self) -> bool:
        return (
            self.shear_range == 0
            and self.rotation_range_deg == 0
            and self.width_shift == 0
            and self.height_shift == 0
            and self.zoom_range == 0
            and not self.horizontal_flip
        )


class ManifestEntry(BaseModel):
    """One sample of a manifest; paths are relative to the manifest directory"""

    id: str
    image: str
    mask: str
    lesion_class: LesionClass
    provenance: Provenance = Provenance.SYNTHETIC
    spacing: float = Field(gt=0)
    image_sha256: str
    mask_sha256: str


class DatasetManifest(BaseModel):
    """Versioned listing of a dataset split"""

    version: int = 1
    split: Split
    seed: int
    samples: list[ManifestEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def _unique_ids(self) -> Self:
        ids = [s.id for s in self.samples]
        if len(ids) != len(set(ids)):
            raise ValueError("manifest sample ids are not unique")
        return self

    def ids(self) -> list[str]:
        return [s.id for s in self.samples]
