"""Tests for generator and discriminator construction"""

import numpy as np
import pytest
import torch
from src.errors import ShapeError
from src.models.netzoo import Backbone, DiscriminatorConfig, DiscriminatorKind, GeneratorConfig
from src.netzoo import INIT_STD, build_discriminator, build_generator, forward


def test_resnet_generator_preserves_shape():
    """ResNet generator maps HxW to HxW with tanh-bounded values"""
    net = build_generator(GeneratorConfig(base_width=4, n_res_blocks=2), seed=0)
    out = net(torch.randn(2, 1, 16, 20))
    assert out.shape == (2, 1, 16, 20)
    assert out.abs().max() <= 1.0


def test_unet_generator_preserves_shape():
    """U-Net generator handles a 1x1 bottleneck"""
    cfg = GeneratorConfig(backbone=Backbone.UNET, base_width=4, unet_depth=4)
    net = build_generator(cfg, seed=0)
    out = net(np.zeros((16, 16)))
    assert out.shape == (1, 1, 16, 16)


def test_pixelwise_discriminator_scores_every_pixel():
    """Forward discriminator output has the input's spatial size"""
    cfg = DiscriminatorConfig(kind=DiscriminatorKind.PIXELWISE_FORWARD, base_width=4, n_layers=3)
    net = build_discriminator(cfg, seed=1)
    assert net(torch.zeros(1, 1, 24, 16)).shape == (1, 1, 24, 16)


def test_patch_discriminator_scores_patches():
    """Backward discriminator output is a coarser patch grid"""
    cfg = DiscriminatorConfig(kind=DiscriminatorKind.PATCH_BACKWARD, base_width=4, n_layers=3)
    out = build_discriminator(cfg, seed=1)(torch.zeros(1, 1, 64, 64))
    assert out.shape[:2] == (1, 1)
    assert out.shape[-1] < 64


def test_init_is_seeded():
    """Same seed gives identical parameters, different seeds do not"""
    cfg = GeneratorConfig(base_width=4, n_res_blocks=1)
    a = build_generator(cfg, seed=5).parameter_vector()
    b = build_generator(cfg, seed=5).parameter_vector()
    c = build_generator(cfg, seed=6).parameter_vector()
    assert torch.equal(a, b)
    assert not torch.equal(a, c)


def test_init_weight_statistics():
    """Convolution weights ~ N(0, 0.02) and biases start at zero"""
    net = build_generator(GeneratorConfig(base_width=16, n_res_blocks=2), seed=0)
    weights, biases = [], []
    for module in net.module.modules():
        if isinstance(module, torch.nn.Conv2d | torch.nn.ConvTranspose2d):
            weights.append(module.weight.detach().flatten())
            if module.bias is not None:
                biases.append(module.bias.detach().flatten())
    w = torch.cat(weights)
    assert float(w.std()) == pytest.approx(INIT_STD, rel=0.05)
    assert abs(float(w.mean())) < 1e-3
    assert torch.count_nonzero(torch.cat(biases)) == 0


def test_forward_rejects_indivisible_input():
    """Input sides must be multiples of the backbone's downsampling factor"""
    resnet = build_generator(GeneratorConfig(base_width=4, n_res_blocks=1), seed=0)
    with pytest.raises(ShapeError):
        resnet(torch.zeros(1, 1, 18, 16))

    unet = build_generator(GeneratorConfig(backbone=Backbone.UNET, base_width=4, unet_depth=4), seed=0)
    assert unet.size_multiple == 16
    with pytest.raises(ShapeError):
        unet(torch.zeros(1, 1, 24, 24))


def test_state_dict_round_trip():
    """Loading a state dict reproduces the parameters"""
    cfg = GeneratorConfig(base_width=4, n_res_blocks=1)
    source = build_generator(cfg, seed=1)
    target = build_generator(cfg, seed=2)
    target.load_state_dict(source.state_dict())
    assert torch.equal(source.parameter_vector(), target.parameter_vector())
    assert source.parameter_count == target.parameter_count > 0


def test_forward_is_nonlinear():
    """Generator outputs are not additive or homogeneous in the input"""
    net = build_generator(GeneratorConfig(base_width=4, n_res_blocks=1), seed=0)
    gen = torch.Generator().manual_seed(0)
    a = torch.randn(1, 1, 16, 16, generator=gen)
    b = torch.randn(1, 1, 16, 16, generator=gen)
    with torch.no_grad():
        assert not torch.allclose(forward(net, a + b), forward(net, a) + forward(net, b), atol=1e-4)
        assert not torch.allclose(forward(net, 2 * a), 2 * forward(net, a), atol=1e-4)


@pytest.mark.parametrize("backbone", [Backbone.RESNET9, Backbone.UNET])
def test_parameter_gradients_match_finite_differences(backbone):
    """d/dθ of a weighted output sum agrees with central differences (h = 1e-3)"""
    cfg = GeneratorConfig(backbone=backbone, base_width=8, n_res_blocks=1, unet_depth=2)
    net = build_generator(cfg, seed=2)
    net.module.double()
    gen = torch.Generator().manual_seed(1)
    x = torch.randn(1, 1, 16, 16, generator=gen, dtype=torch.float64)
    weights = torch.randn(1, 1, 16, 16, generator=gen, dtype=torch.float64)

    def functional() -> torch.Tensor:
        return (forward(net, x) * weights).sum()

    params = list(net.module.parameters())
    functional().backward()

    rng = np.random.default_rng(0)
    h, agreed = 1e-3, 0
    for _ in range(200):
        p = params[rng.integers(len(params))]
        index = tuple(int(rng.integers(s)) for s in p.shape)
        analytic = float(p.grad[index])
        with torch.no_grad():
            original = float(p[index])
            p[index] = original + h
            plus = float(functional())
            p[index] = original - h
            minus = float(functional())
            p[index] = original
        numeric = (plus - minus) / (2 * h)
        agreed += abs(analytic - numeric) <= 1e-2 * max(abs(analytic), abs(numeric)) + 1e-6
    assert agreed >= 198
