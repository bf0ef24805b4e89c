"""Synthetic ultrasound phantoms, preprocessing, augmentation and dataset manifests

Phantoms are pure functions of ``(PhantomSpec, seed)``: a hypoechoic lesion with a
blurred boundary on textured tissue, multiplicative speckle, optional posterior
shadowing and monotone depth attenuation. Images live in [-1, 1].
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage.transform import resize

from .config import settings
from .errors import DomainError, ManifestError, ResourceLimitError
from .models.phantom import (
    AugConfig,
    DatasetManifest,
    GrayImage,
    LesionClass,
    ManifestEntry,
    PairedSample,
    PhantomSpec,
    Provenance,
    SegMask,
    Split,
)
from .utils.json_store import JSONStore
from .utils.raster_io import (
    image_to_uint16,
    mask_to_uint16,
    read_png16,
    sha256_file,
    uint16_to_image,
    uint16_to_mask,
    write_png16,
)

MANIFEST_VERSION = 1
TISSUE_LEVEL = 0.6
MARGIN_HARMONICS = (2, 3, 4, 5)


def generate_phantom(
    spec: PhantomSpec,
    seed: int,
    sample_id: str | None = None,
    provenance: Provenance = Provenance.SYNTHETIC,
) -> PairedSample:
    """Generate one phantom; the mask is the lesion support before blurring"""
    rng = np.random.default_rng(seed)
    h, w = spec.canvas
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)

    # Every draw happens unconditionally so the stream layout never depends on flags
    malignant = rng.random() < spec.malignant_probability
    radius = rng.uniform(*spec.lesion_radius_range)
    row_hi = max(radius, min(0.6 * h, h - 1 - radius))
    cy = rng.uniform(radius, row_hi)
    cx = rng.uniform(radius, max(radius, w - 1 - radius))
    harmonic_amp = rng.uniform(0.0, 1.0, len(MARGIN_HARMONICS))
    harmonic_phase = rng.uniform(0.0, 2 * np.pi, len(MARGIN_HARMONICS))
    texture_noise = rng.standard_normal((h, w))
    has_shadow = rng.random() < spec.shadow_probability
    speckle_a = rng.standard_normal((h, w))
    speckle_b = rng.standard_normal((h, w))

    # Lesion support
    irregularity = spec.margin_irregularity if malignant else spec.margin_irregularity / 3
    theta = np.arctan2(rows - cy, cols - cx)
    dist = np.hypot(rows - cy, cols - cx)
    margin = _margin_profile(theta, harmonic_amp, harmonic_phase)
    mask = dist <= radius * (1.0 + irregularity * margin)
    mask[int(round(cy)), int(round(cx))] = True

    # Tissue with low-frequency texture, darker lesion with soft edge
    texture = ndimage.gaussian_filter(texture_noise, sigma=max(h, w) / 12)
    texture /= max(texture.std(), 1e-12)
    tissue = TISSUE_LEVEL * np.clip(1.0 + spec.background_texture * texture, 0.3, 1.7)
    soft = mask.astype(np.float64)
    if spec.boundary_blur_sigma > 0:
        soft = ndimage.gaussian_filter(soft, sigma=spec.boundary_blur_sigma)
    echo = tissue * (1.0 - spec.lesion_contrast * soft)

    shadow = np.ones((h, w))
    if has_shadow:
        shadow = _posterior_shadow(mask, spec.shadow_attenuation, onset=max(1.0, radius / 2))

    depth = spec.depth_attenuation ** rows

    envelope = np.hypot(
        ndimage.gaussian_filter(speckle_a, sigma=spec.speckle_grain),
        ndimage.gaussian_filter(speckle_b, sigma=spec.speckle_grain),
    )
    envelope /= max(envelope.mean(), 1e-12)

    intensity = echo * shadow * depth * envelope
    values = 2.0 * np.tanh(intensity) - 1.0

    return PairedSample(
        id=sample_id or f"phantom-{seed}",
        image=GrayImage(values=values, spacing=spec.spacing_mm),
        mask=SegMask.from_bool(mask),
        lesion_class=LesionClass.MALIGNANT if malignant else LesionClass.BENIGN,
        provenance=provenance,
    )


def _margin_profile(theta: np.ndarray, amp: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """Radial perturbation in [-1, 1] built from a few angular harmonics"""
    dense = np.linspace(-np.pi, np.pi, 720)
    profile = sum(a * np.cos(k * dense + p) for k, a, p in zip(MARGIN_HARMONICS, amp, phase, strict=True))
    scale = max(np.abs(profile).max(), 1e-12)
    return sum(a * np.cos(k * theta + p) for k, a, p in zip(MARGIN_HARMONICS, amp, phase, strict=True)) / scale


def _posterior_shadow(mask: np.ndarray, attenuation: float, onset: float) -> np.ndarray:
    """Attenuate columns below the lesion with a linear onset from its lower edge"""
    h, _ = mask.shape
    has_lesion = mask.any(axis=0)
    bottom = np.where(has_lesion, h - 1 - np.argmax(mask[::-1], axis=0), np.inf)
    rows = np.arange(h, dtype=np.float64)[:, None]
    ramp = np.clip((rows - bottom[None, :]) / onset, 0.0, 1.0)
    shadow = 1.0 - attenuation * ramp
    return ndimage.gaussian_filter1d(shadow, sigma=1.0, axis=1, mode="nearest")


def resample(img: GrayImage, target_spacing: float, max_dimension: int | None = None) -> GrayImage:
    """Bilinear resampling to a new isotropic pixel spacing"""
    if target_spacing <= 0:
        raise DomainError(f"target spacing must be positive, got {target_spacing}")
    if target_spacing == img.spacing:
        return GrayImage(values=img.values.copy(), spacing=img.spacing)
    shape = _resampled_shape(img.shape, img.spacing / target_spacing, max_dimension)
    values = resize(img.values, shape, order=1, mode="edge", anti_aliasing=False, preserve_range=True)
    return GrayImage(values=np.clip(values, -1.0, 1.0), spacing=target_spacing)


def _resampled_shape(
    shape: tuple[int, int], ratio: float, max_dimension: int | None
) -> tuple[int, int]:
    cap = max_dimension or settings.max_dimension
    out = (max(1, int(round(shape[0] * ratio))), max(1, int(round(shape[1] * ratio))))
    if max(out) > cap:
        raise ResourceLimitError(f"resampled size {out} exceeds the dimension cap {cap}")
    return out


def _resample_mask(mask: SegMask, shape: tuple[int, int]) -> SegMask:
    if mask.shape == shape:
        return mask
    values = resize(mask.values, shape, order=0, mode="edge", anti_aliasing=False, preserve_range=True)
    return SegMask.from_bool(values >= 0.5)


def crop_roi(img: GrayImage, center: tuple[int, int], size: int) -> GrayImage:
    """Square window centered at (row, col), padded with the image minimum"""
    values = _crop(img.values, center, size, fill=float(img.values.min()))
    return GrayImage(values=values, spacing=img.spacing)


def _crop(values: np.ndarray, center: tuple[int, int], size: int, fill: float) -> np.ndarray:
    if size < 1:
        raise DomainError(f"ROI size must be >= 1, got {size}")
    row, col = center
    h, w = values.shape
    if not (0 <= row < h and 0 <= col < w):
        raise DomainError(f"ROI center {center} lies outside the {h}x{w} image")
    top = row - size // 2
    left = col - size // 2
    padded = np.pad(values, size, mode="constant", constant_values=fill)
    return padded[top + size : top + 2 * size, left + size : left + 2 * size].copy()


def lesion_centroid(mask: SegMask) -> tuple[int, int]:
    row, col = ndimage.center_of_mass(mask.values >= 0.5)
    return int(round(row)), int(round(col))


def preprocess_sample(sample: PairedSample, target_spacing: float, roi_size: int) -> PairedSample:
    """Resample to the target spacing and crop a lesion-centered ROI"""
    image = resample(sample.image, target_spacing)
    mask = _resample_mask(sample.mask, image.shape)
    center = lesion_centroid(mask)
    return PairedSample(
        id=sample.id,
        image=crop_roi(image, center, roi_size),
        mask=SegMask(values=_crop(mask.values, center, roi_size, fill=0.0)),
        lesion_class=sample.lesion_class,
        provenance=sample.provenance,
    )


@dataclass(frozen=True)
class AugParams:
    """One concrete geometric transform (forward map about the image center)"""

    rotation_deg: float = 0.0
    shear: float = 0.0
    zoom_row: float = 1.0
    zoom_col: float = 1.0
    shift_row: float = 0.0
    shift_col: float = 0.0
    flip: bool = False

    def matrix(self) -> np.ndarray:
        """Forward linear part acting on (row, col) offsets from the center"""
        t = np.deg2rad(self.rotation_deg)
        rotation = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        shear = np.array([[1.0, 0.0], [self.shear, 1.0]])
        zoom = np.diag([self.zoom_row, self.zoom_col])
        return rotation @ shear @ zoom

    @property
    def is_affine_identity(self) -> bool:
        return (
            self.rotation_deg == 0
            and self.shear == 0
            and self.zoom_row == 1
            and self.zoom_col == 1
            and self.shift_row == 0
            and self.shift_col == 0
        )


def draw_aug_params(cfg: AugConfig, shape: tuple[int, int], seed: int) -> AugParams:
    rng = np.random.default_rng(seed)
    h, w = shape
    rotation = rng.uniform(-cfg.rotation_range_deg, cfg.rotation_range_deg)
    shear = rng.uniform(-cfg.shear_range, cfg.shear_range)
    zoom_lo, zoom_hi = 1.0 / (1.0 + cfg.zoom_range), 1.0 + cfg.zoom_range
    zoom_row, zoom_col = rng.uniform(zoom_lo, zoom_hi, 2)
    shift_row = rng.uniform(-cfg.height_shift, cfg.height_shift) * h
    shift_col = rng.uniform(-cfg.width_shift, cfg.width_shift) * w
    flip = bool(rng.random() < cfg.flip_probability) and cfg.horizontal_flip
    return AugParams(
        rotation_deg=float(rotation),
        shear=float(shear),
        zoom_row=float(zoom_row),
        zoom_col=float(zoom_col),
        shift_row=float(shift_row),
        shift_col=float(shift_col),
        flip=flip,
    )


def apply_transform(sample: PairedSample, params: AugParams) -> PairedSample:
    """Apply one transform: bilinear on the image, nearest + threshold on the mask"""
    image = sample.image.values
    mask = sample.mask.values
    if not params.is_affine_identity:
        center = (np.array(image.shape, dtype=np.float64) - 1.0) / 2.0
        inverse = np.linalg.inv(params.matrix())
        offset = center - inverse @ (center + np.array([params.shift_row, params.shift_col]))
        image = ndimage.affine_transform(image, inverse, offset=offset, order=1, mode="nearest")
        mask = ndimage.affine_transform(mask, inverse, offset=offset, order=0, mode="constant", cval=0.0)
    if params.flip:
        image = np.fliplr(image)
        mask = np.fliplr(mask)
    binary = mask >= 0.5
    if not binary.any():
        return sample
    return PairedSample(
        id=sample.id,
        image=GrayImage(values=np.clip(image, -1.0, 1.0), spacing=sample.image.spacing),
        mask=SegMask.from_bool(binary),
        lesion_class=sample.lesion_class,
        provenance=sample.provenance,
    )


def augment(sample: PairedSample, cfg: AugConfig, seed: int) -> PairedSample:
    """Random geometric augmentation, deterministic given the seed"""
    if cfg.is_identity:
        return sample
    return apply_transform(sample, draw_aug_params(cfg, sample.image.shape, seed))


def sample_seed(seed: int, split: Split, index: int) -> int:
    split_index = list(Split).index(split)
    return int(np.random.SeedSequence([seed, split_index, index]).generate_state(1)[0])


def generate_split(
    spec: PhantomSpec,
    split: Split,
    count: int,
    seed: int,
    target_spacing: float,
    roi_size: int,
) -> list[PairedSample]:
    """Generate and preprocess ``count`` phantoms with ids ``<split>-NNNN``"""
    provenance = Provenance.EXTERNAL if split == Split.EXTERNAL else Provenance.SYNTHETIC
    samples = []
    for i in range(count):
        raw = generate_phantom(
            spec, sample_seed(seed, split, i), sample_id=f"{split}-{i:04d}", provenance=provenance
        )
        samples.append(preprocess_sample(raw, target_spacing, roi_size))
    return samples


def write_dataset(
    samples: list[PairedSample], split: Split, seed: int, root: Path
) -> DatasetManifest:
    """Write rasters under ``root`` and the manifest ``root/manifest.json``"""
    entries = []
    for sample in samples:
        image_rel = f"images/{sample.id}.png"
        mask_rel = f"masks/{sample.id}.png"
        write_png16(root / image_rel, image_to_uint16(sample.image.values))
        write_png16(root / mask_rel, mask_to_uint16(sample.mask.values))
        entries.append(
            ManifestEntry(
                id=sample.id,
                image=image_rel,
                mask=mask_rel,
                lesion_class=sample.lesion_class,
                provenance=sample.provenance,
                spacing=sample.image.spacing,
                image_sha256=sha256_file(root / image_rel),
                mask_sha256=sha256_file(root / mask_rel),
            )
        )
    manifest = DatasetManifest(version=MANIFEST_VERSION, split=split, seed=seed, samples=entries)
    save_manifest(manifest, root / "manifest.json")
    return manifest


def save_manifest(ds: DatasetManifest, path: Path) -> None:
    JSONStore(path.parent).write(path.name, ds)


def load_manifest(path: Path) -> DatasetManifest:
    """Load a manifest and verify every referenced raster"""
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    manifest = JSONStore(path.parent).read_model(path.name, DatasetManifest)
    if manifest.version != MANIFEST_VERSION:
        raise ManifestError(
            f"manifest version {manifest.version} is not supported (expected {MANIFEST_VERSION})"
        )
    root = path.parent
    for entry in manifest.samples:
        for rel, digest in ((entry.image, entry.image_sha256), (entry.mask, entry.mask_sha256)):
            file_path = root / rel
            if not file_path.exists():
                raise ManifestError(f"sample {entry.id}: missing file {rel}")
            if sha256_file(file_path) != digest:
                raise ManifestError(f"sample {entry.id}: checksum mismatch for {rel}")
    return manifest


def load_samples(path: Path) -> list[PairedSample]:
    """Load a verified manifest and decode its samples"""
    manifest = load_manifest(path)
    root = path.parent
    return [
        PairedSample(
            id=entry.id,
            image=GrayImage(
                values=uint16_to_image(read_png16(root / entry.image)), spacing=entry.spacing
            ),
            mask=SegMask(values=uint16_to_mask(read_png16(root / entry.mask))),
            lesion_class=entry.lesion_class,
            provenance=entry.provenance,
        )
        for entry in manifest.samples
    ]
