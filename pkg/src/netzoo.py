"""Generator backbones, discriminators and weight initialization

Channel schedules mirror the usual cycle-GAN release at ``base_width=64`` and
shrink proportionally for small desk runs.
"""

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .errors import NumericFaultError, ShapeError
from .models.netzoo import Backbone, DiscriminatorConfig, DiscriminatorKind, GeneratorConfig
from .models.phantom import GrayImage

INIT_STD = 0.02


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, kernel_size=3),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, kernel_size=3),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.block(x)


class ResnetGenerator(nn.Module):
    """Two stride-2 downsamplings, residual trunk, two transpose upsamplings"""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        c = cfg.base_width
        layers: list[nn.Module] = [
            nn.ReflectionPad2d(3),
            nn.Conv2d(cfg.in_channels, c, kernel_size=7),
            nn.InstanceNorm2d(c),
            nn.ReLU(inplace=True),
        ]
        for i in range(2):
            layers += [
                nn.Conv2d(c * 2**i, c * 2 ** (i + 1), kernel_size=3, stride=2, padding=1),
                nn.InstanceNorm2d(c * 2 ** (i + 1)),
                nn.ReLU(inplace=True),
            ]
        layers += [ResidualBlock(c * 4) for _ in range(cfg.n_res_blocks)]
        for i in range(2):
            c_in = c * 2 ** (2 - i)
            layers += [
                nn.ConvTranspose2d(
                    c_in, c_in // 2, kernel_size=3, stride=2, padding=1, output_padding=1
                ),
                nn.InstanceNorm2d(c_in // 2),
                nn.ReLU(inplace=True),
            ]
        layers += [
            nn.ReflectionPad2d(3),
            nn.Conv2d(c, cfg.out_channels, kernel_size=7),
            nn.Tanh(),
        ]
        self.model = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.model(x)


class ConvBlock(nn.Module):
    """Two 3x3 convolutions with normalization and leaky activation"""

    def __init__(self, c_in: int, c_out: int, normalize: bool = True, padding_mode: str = "reflect"):
        super().__init__()
        norm = nn.InstanceNorm2d if normalize else lambda _: nn.Identity()
        self.block = nn.Sequential(
            nn.Conv2d(c_in, c_out, kernel_size=3, padding=1, padding_mode=padding_mode),
            norm(c_out),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(c_out, c_out, kernel_size=3, padding=1, padding_mode=padding_mode),
            norm(c_out),
            nn.LeakyReLU(0.2, inplace=True),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.block(x)


class UNetGenerator(nn.Module):
    """Encoder/decoder with skip connections, ``unet_depth`` resolution levels"""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        c = cfg.base_width
        widths = [min(c * 2**i, c * 8) for i in range(cfg.unet_depth + 1)]
        self.encoders = nn.ModuleList()
        self.downs = nn.ModuleList()
        prev = cfg.in_channels
        for w in widths[:-1]:
            self.encoders.append(ConvBlock(prev, w))
            self.downs.append(
                nn.Sequential(
                    nn.Conv2d(w, w, kernel_size=3, stride=2, padding=1, padding_mode="reflect"),
                    nn.LeakyReLU(0.2, inplace=True),
                )
            )
            prev = w
        # deepest level may be 1x1: no reflection, no normalization
        self.bottleneck = ConvBlock(widths[-2], widths[-1], normalize=False, padding_mode="zeros")
        self.ups = nn.ModuleList()
        self.decoders = nn.ModuleList()
        for i in reversed(range(cfg.unet_depth)):
            self.ups.append(nn.ConvTranspose2d(widths[i + 1], widths[i], kernel_size=2, stride=2))
            self.decoders.append(ConvBlock(2 * widths[i], widths[i]))
        self.head = nn.Sequential(nn.Conv2d(widths[0], cfg.out_channels, kernel_size=1), nn.Tanh())

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skips = []
        for encoder, down in zip(self.encoders, self.downs, strict=True):
            x = encoder(x)
            skips.append(x)
            x = down(x)
        x = self.bottleneck(x)
        for up, decoder, skip in zip(self.ups, self.decoders, reversed(skips), strict=True):
            x = decoder(torch.cat([up(x), skip], dim=1))
        return self.head(x)


class PixelwiseDiscriminator(nn.Module):
    """Stride-1 dilated trunk producing one score per input pixel"""

    def __init__(self, cfg: DiscriminatorConfig):
        super().__init__()
        c = cfg.base_width
        layers: list[nn.Module] = [
            nn.Conv2d(cfg.in_channels, c, kernel_size=3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        ]
        for i in range(1, cfg.n_layers):
            dilation = 2**i
            layers += [
                nn.Conv2d(c, c, kernel_size=3, padding=dilation, dilation=dilation),
                nn.InstanceNorm2d(c),
                nn.LeakyReLU(0.2, inplace=True),
            ]
        layers.append(nn.Conv2d(c, 1, kernel_size=1))
        self.model = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.model(x)


class PatchDiscriminator(nn.Module):
    """Strided patch discriminator (70x70 receptive field with 3 layers)"""

    def __init__(self, cfg: DiscriminatorConfig):
        super().__init__()
        ndf = cfg.base_width
        layers: list[nn.Module] = [
            nn.Conv2d(cfg.in_channels, ndf, kernel_size=4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        ]
        nf_mult = 1
        for n in range(1, cfg.n_layers):
            nf_mult_prev, nf_mult = nf_mult, min(2**n, 8)
            layers += [
                nn.Conv2d(ndf * nf_mult_prev, ndf * nf_mult, kernel_size=4, stride=2, padding=1),
                nn.InstanceNorm2d(ndf * nf_mult),
                nn.LeakyReLU(0.2, inplace=True),
            ]
        nf_mult_prev, nf_mult = nf_mult, min(2**cfg.n_layers, 8)
        layers += [
            nn.Conv2d(ndf * nf_mult_prev, ndf * nf_mult, kernel_size=4, stride=1, padding=1),
            nn.InstanceNorm2d(ndf * nf_mult),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(ndf * nf_mult, 1, kernel_size=4, stride=1, padding=1),
        ]
        self.model = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.model(x)


@dataclass
class NetHandle:
    """A built network together with the configuration and seed that produced it"""

    module: nn.Module
    config: GeneratorConfig | DiscriminatorConfig
    seed: int

    @property
    def size_multiple(self) -> int:
        if isinstance(self.config, GeneratorConfig):
            return self.config.size_multiple
        if self.config.kind == DiscriminatorKind.PATCH_BACKWARD:
            return 2**self.config.n_layers
        return 1

    @property
    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.module.parameters())

    def parameter_vector(self) -> torch.Tensor:
        return nn.utils.parameters_to_vector(self.module.parameters()).detach().clone()

    def state_dict(self) -> dict[str, torch.Tensor]:
        return {k: v.detach().cpu().clone() for k, v in self.module.state_dict().items()}

    def load_state_dict(self, state: dict[str, torch.Tensor]) -> None:
        self.module.load_state_dict(state)

    def __call__(self, x: torch.Tensor | GrayImage | np.ndarray) -> torch.Tensor:
        return forward(self, x)


def build_generator(cfg: GeneratorConfig, seed: int) -> NetHandle:
    module = ResnetGenerator(cfg) if cfg.backbone == Backbone.RESNET9 else UNetGenerator(cfg)
    net = NetHandle(module=module, config=cfg, seed=seed)
    init_weights(net, seed)
    return net


def build_discriminator(cfg: DiscriminatorConfig, seed: int) -> NetHandle:
    if cfg.kind == DiscriminatorKind.PIXELWISE_FORWARD:
        module: nn.Module = PixelwiseDiscriminator(cfg)
    else:
        module = PatchDiscriminator(cfg)
    net = NetHandle(module=module, config=cfg, seed=seed)
    init_weights(net, seed)
    return net


def init_weights(net: NetHandle, seed: int) -> None:
    """Convolution weights ~ N(0, 0.02) i.i.d., biases zero"""
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for module in net.module.modules():
            if isinstance(module, nn.Conv2d | nn.ConvTranspose2d):
                noise = torch.randn(module.weight.shape, generator=generator, dtype=torch.float64)
                module.weight.copy_(noise * INIT_STD)
                if module.bias is not None:
                    module.bias.zero_()


def as_batch(x: torch.Tensor | GrayImage | np.ndarray, like: nn.Module) -> torch.Tensor:
    """Lift an image to an (N, C, H, W) tensor on the module's device and dtype"""
    if isinstance(x, GrayImage):
        x = x.values
    param = next(like.parameters())
    if isinstance(x, np.ndarray):
        x = torch.as_tensor(x)
    if x.dim() == 2:
        x = x[None, None]
    elif x.dim() == 3:
        x = x[None]
    return x.to(device=param.device, dtype=param.dtype)


def forward(net: NetHandle, x: torch.Tensor | GrayImage | np.ndarray) -> torch.Tensor:
    """Apply the network; differentiable, with shape and finiteness checks"""
    batch = as_batch(x, net.module)
    h, w = batch.shape[-2:]
    m = net.size_multiple
    if h % m or w % m:
        raise ShapeError(f"input {h}x{w} is not divisible by {m} for {net.module.__class__.__name__}")
    out = net.module(batch)
    if not torch.isfinite(out).all():
        raise NumericFaultError(f"{net.module.__class__.__name__} produced non-finite output")
    return out
