"""Tests for phantom generation, preprocessing, augmentation and manifests"""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import ndimage
from src.errors import DomainError, ManifestError, ResourceLimitError
from src.models.phantom import (
    AugConfig,
    GrayImage,
    LesionClass,
    PairedSample,
    PhantomSpec,
    Provenance,
    SegMask,
    Split,
)
from src.phantom import (
    AugParams,
    apply_transform,
    augment,
    crop_roi,
    generate_phantom,
    generate_split,
    load_manifest,
    load_samples,
    preprocess_sample,
    resample,
    write_dataset,
)

from tests.conftest import disk_sample


def test_generate_phantom_is_deterministic():
    """Same phantom parameters and seed give bitwise-identical samples"""
    spec = PhantomSpec()
    a = generate_phantom(spec, 7)
    b = generate_phantom(spec, 7)
    np.testing.assert_array_equal(a.image.values, b.image.values)
    np.testing.assert_array_equal(a.mask.values, b.mask.values)
    assert a.lesion_class == b.lesion_class


def test_generate_phantom_differs_across_seeds():
    """Different seeds give different images"""
    spec = PhantomSpec()
    assert not np.array_equal(generate_phantom(spec, 1).image.values, generate_phantom(spec, 2).image.values)


def test_generate_phantom_fixed_radius_area():
    """A radius range of [10, 10] rasterizes to roughly a disc of radius 10"""
    spec = PhantomSpec(lesion_radius_range=(10.0, 10.0))
    for seed in range(5):
        area = generate_phantom(spec, seed).mask.foreground
        assert np.pi * 9**2 <= area <= np.pi * 11**2


def test_generate_phantom_values_in_range():
    """Images stay within [-1, 1] and masks are binary"""
    sample = generate_phantom(PhantomSpec(), 11)
    assert sample.image.values.min() >= -1.0
    assert sample.image.values.max() <= 1.0
    assert set(np.unique(sample.mask.values)) <= {0.0, 1.0}


def test_posterior_shadow_darkens_band_below_lesion():
    """With certain shadowing the band below the lesion is darker than lateral bands"""
    spec = PhantomSpec(
        canvas=(128, 128), lesion_radius_range=(10.0, 10.0), shadow_probability=1.0, shadow_attenuation=0.8
    )
    for seed in range(3):
        sample = generate_phantom(spec, seed)
        mask = sample.mask.values >= 0.5
        rows, cols = np.nonzero(mask)
        bottom, cy = rows.max(), int(round(rows.mean()))
        cx = int(round(cols.mean()))
        top, stop = bottom + 8, min(128, bottom + 28)
        below = sample.image.values[top:stop, cx - 4 : cx + 5].mean()
        lateral = []
        for lo in (cx - 30, cx + 22):
            if lo >= 0 and lo + 9 <= 128:
                lateral.append(sample.image.values[top:stop, lo : lo + 9].mean())
        assert lateral, f"seed {seed}: lesion at column {cx} leaves no lateral band (row {cy})"
        assert below < min(lateral)


def test_phantom_spec_rejects_large_radius():
    """Invalid specs name the offending field"""
    with pytest.raises(ValidationError, match="lesion_radius_range"):
        PhantomSpec(canvas=(32, 32), lesion_radius_range=(4.0, 16.0))


def test_phantom_spec_rejects_out_of_unit_probability():
    """Probabilities outside [0, 1] are rejected"""
    with pytest.raises(ValidationError, match="shadow_probability"):
        PhantomSpec(shadow_probability=1.5)


def test_vendor_presets_differ():
    """The second vendor preset changes the speckle grain"""
    assert PhantomSpec.preset("vendor_a") == PhantomSpec()
    assert PhantomSpec.preset("vendor_b").speckle_grain != PhantomSpec().speckle_grain


def test_resample_scales_dimensions():
    """100x100 at 0.2 mm becomes 200x200 at 0.1 mm"""
    img = GrayImage(values=np.zeros((100, 100)), spacing=0.2)
    out = resample(img, 0.1)
    assert out.shape == (200, 200)
    assert out.spacing == 0.1


def test_resample_identity_and_constant():
    """Same spacing returns the same values; constants stay constant"""
    rng = np.random.default_rng(0)
    img = GrayImage(values=rng.uniform(-1, 1, (20, 30)), spacing=0.1)
    np.testing.assert_array_equal(resample(img, 0.1).values, img.values)

    constant = GrayImage(values=np.full((20, 30), 0.25), spacing=0.2)
    np.testing.assert_allclose(resample(constant, 0.15).values, 0.25, atol=1e-6)


def test_resample_errors():
    """Non-positive spacing and oversize outputs are refused"""
    img = GrayImage(values=np.zeros((10, 10)), spacing=0.1)
    with pytest.raises(DomainError):
        resample(img, 0.0)
    with pytest.raises(ResourceLimitError):
        resample(img, 0.001, max_dimension=500)


def test_resample_round_trip_on_smooth_image():
    """Up to half the spacing and back reproduces a smooth image closely"""
    rr, cc = np.indices((64, 64), dtype=np.float64)
    values = 0.8 * np.sin(2 * np.pi * rr / 32) * np.cos(2 * np.pi * cc / 24)
    img = GrayImage(values=values, spacing=0.1)

    back = resample(resample(img, 0.05), 0.1)

    assert back.shape == img.shape
    assert np.abs(back.values - img.values).mean() < 0.05


def test_crop_roi_pads_with_minimum():
    """Windows reaching past the border are padded with the image minimum"""
    values = np.linspace(-0.5, 0.5, 100).reshape(10, 10)
    out = crop_roi(GrayImage(values=values), (0, 0), 6)
    assert out.shape == (6, 6)
    assert out.values[0, 0] == pytest.approx(-0.5)
    assert out.values[3, 3] == pytest.approx(values[0, 0])
    np.testing.assert_allclose(out.values[3:, 3:], values[:3, :3])


def test_crop_roi_center_outside():
    """A center outside the image is a domain error"""
    with pytest.raises(DomainError):
        crop_roi(GrayImage(values=np.zeros((10, 10))), (10, 2), 4)


def test_preprocess_sample_centers_lesion():
    """The cropped ROI keeps the lesion near its center"""
    sample = disk_sample(size=40, radius=5, center=(10.0, 28.0))
    out = preprocess_sample(sample, 0.1, 16)
    assert out.image.shape == (16, 16)
    rows, cols = np.nonzero(out.mask.values)
    assert abs(rows.mean() - 8) <= 1
    assert abs(cols.mean() - 8) <= 1


def test_augment_disabled_is_identity():
    """A disabled configuration returns the sample unchanged"""
    sample = disk_sample()
    assert augment(sample, AugConfig.disabled(), seed=5) is sample


def test_augment_is_deterministic_and_binary():
    """Same seed gives the same transform; masks stay binary and aligned"""
    sample = disk_sample(size=32, radius=6)
    a = augment(sample, AugConfig(), seed=9)
    b = augment(sample, AugConfig(), seed=9)
    np.testing.assert_array_equal(a.image.values, b.image.values)
    assert a.image.shape == a.mask.shape == (32, 32)
    assert set(np.unique(a.mask.values)) <= {0.0, 1.0}
    assert a.mask.foreground > 0


def test_flip_only_transform_mirrors():
    """A pure flip mirrors image and mask left to right"""
    sample = disk_sample(size=16, radius=3, center=(7.0, 4.0))
    out = apply_transform(sample, AugParams(flip=True))
    np.testing.assert_array_equal(out.image.values, np.fliplr(sample.image.values))
    np.testing.assert_array_equal(out.mask.values, np.fliplr(sample.mask.values))


def test_transform_emptying_mask_returns_original():
    """A shift that moves the lesion out of view leaves the sample unchanged"""
    sample = disk_sample(size=16, radius=2, center=(8.0, 8.0))
    assert apply_transform(sample, AugParams(shift_col=40.0)) is sample


def test_rotation_moves_bright_pixel_by_rotation_matrix():
    """A pure 10 degree rotation carries a bright pixel to where the rotation matrix sends it"""
    size = 32
    values = np.zeros((size, size))
    values[10, 20] = 1.0
    rr, cc = np.indices((size, size))
    lesion = np.hypot(rr - 15.5, cc - 15.5) <= 4
    sample = PairedSample(
        id="hot", image=GrayImage(values=values), mask=SegMask.from_bool(lesion), lesion_class=LesionClass.BENIGN
    )

    out = apply_transform(sample, AugParams(rotation_deg=10.0))

    t = np.deg2rad(10.0)
    rotation = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    center = np.array([15.5, 15.5])
    expected = center + rotation @ (np.array([10.0, 20.0]) - center)
    weights = np.clip(out.image.values, 0.0, None)
    assert weights.sum() > 0
    centroid = np.array(ndimage.center_of_mass(weights))
    assert np.linalg.norm(centroid - expected) <= 1.0


@pytest.mark.parametrize("center", [(15.5, 15.5), (6.0, 25.0)])
def test_augment_keeps_lesion_on_dark_pixels(center):
    """Across many draws the mask stays non-empty and still covers the darker pixels"""
    sample = disk_sample(size=32, radius=5, center=center)
    for seed in range(40):
        out = augment(sample, AugConfig(rotation_range_deg=30.0, zoom_range=0.2), seed=seed)
        inside = out.mask.values >= 0.5
        assert inside.any(), f"seed {seed}"
        assert out.image.values[inside].mean() < out.image.values[~inside].mean(), f"seed {seed}"


def test_generated_lesion_is_hypoechoic():
    """The lesion is darker on average than a 5 pixel ring of tissue around it"""
    spec = PhantomSpec()
    for seed in range(10):
        sample = generate_phantom(spec, seed)
        mask = sample.mask.values >= 0.5
        ring = ndimage.binary_dilation(mask, iterations=5) & ~mask
        assert sample.image.values[mask].mean() < sample.image.values[ring].mean(), f"seed {seed}"


def test_generate_split_ids_and_provenance():
    """Split ids follow <split>-NNNN; external samples carry their provenance"""
    spec = PhantomSpec(canvas=(32, 32), lesion_radius_range=(4.0, 6.0))
    samples = generate_split(spec, Split.EXTERNAL, 2, seed=0, target_spacing=0.1, roi_size=16)
    assert [s.id for s in samples] == ["external-0000", "external-0001"]
    assert all(s.provenance == Provenance.EXTERNAL for s in samples)
    assert all(s.image.shape == (16, 16) for s in samples)


def test_write_and_load_dataset(tmp_path):
    """Written datasets load back with the same masks and 16-bit image precision"""
    spec = PhantomSpec(canvas=(32, 32), lesion_radius_range=(4.0, 6.0))
    samples = generate_split(spec, Split.TRAIN, 3, seed=1, target_spacing=0.1, roi_size=16)
    manifest = write_dataset(samples, Split.TRAIN, 1, tmp_path / "train")

    assert manifest.ids() == [s.id for s in samples]
    loaded = load_samples(tmp_path / "train" / "manifest.json")
    for original, back in zip(samples, loaded, strict=True):
        np.testing.assert_array_equal(original.mask.values, back.mask.values)
        np.testing.assert_allclose(original.image.values, back.image.values, atol=2.0 / 65535)
        assert original.lesion_class == back.lesion_class


def test_load_manifest_detects_corruption(tmp_path):
    """A modified or missing raster is reported with its sample id"""
    root = tmp_path / "test"
    write_dataset([disk_sample("disk-7")], Split.TEST, 0, root)

    (root / "masks" / "disk-7.png").write_bytes(b"not a png")
    with pytest.raises(ManifestError, match="disk-7"):
        load_manifest(root / "manifest.json")

    (root / "masks" / "disk-7.png").unlink()
    with pytest.raises(ManifestError, match="disk-7"):
        load_manifest(root / "manifest.json")


def test_load_manifest_missing(tmp_path):
    """A missing manifest is a manifest error"""
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "nope" / "manifest.json")
