"""Pydantic models for network construction"""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field


class Backbone(StrEnum):
    RESNET9 = "resnet9"
    UNET = "unet"


class DiscriminatorKind(StrEnum):
    PIXELWISE_FORWARD = "pixelwise_forward"
    PATCH_BACKWARD = "patch_backward"


class GeneratorConfig(BaseModel):
    """Image-to-image generator backbone"""

    model_config = ConfigDict(extra="forbid")

    backbone: Backbone = Backbone.RESNET9
    in_channels: int = Field(default=1, ge=1)
    out_channels: int = Field(default=1, ge=1)
    base_width: int = Field(default=64, ge=1)
    n_res_blocks: int = Field(default=9, ge=1)  # resnet9 only
    unet_depth: int = Field(default=4, ge=1)  # unet only

    @property
    def size_multiple(self) -> int:
        """Input sides must be divisible by this"""
        if self.backbone == Backbone.RESNET9:
            return 4
        return 2**self.unet_depth


class DiscriminatorConfig(BaseModel):
    """Per-pixel (forward) or patch (backward) discriminator"""

    model_config = ConfigDict(extra="forbid")

    kind: DiscriminatorKind = DiscriminatorKind.PATCH_BACKWARD
    in_channels: int = Field(default=1, ge=1)
    base_width: int = Field(default=64, ge=1)
    n_layers: int = Field(default=3, ge=1)

    @classmethod
    def forward_default(cls, base_width: int = 64) -> "DiscriminatorConfig":
        return cls(kind=DiscriminatorKind.PIXELWISE_FORWARD, base_width=base_width, n_layers=4)

    @classmethod
    def backward_default(cls, base_width: int = 64) -> "DiscriminatorConfig":
        return cls(kind=DiscriminatorKind.PATCH_BACKWARD, base_width=base_width, n_layers=3)
