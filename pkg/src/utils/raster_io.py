"""16-bit lossless PNG storage for images and masks"""

import hashlib
from pathlib import Path

import numpy as np
from PIL import Image

UINT16_MAX = 65535


def image_to_uint16(values: np.ndarray) -> np.ndarray:
    """Map [-1, 1] to [0, 65535]"""
    scaled = np.rint((np.clip(values, -1.0, 1.0) + 1.0) * 0.5 * UINT16_MAX)
    return scaled.astype(np.uint16)


def uint16_to_image(raw: np.ndarray) -> np.ndarray:
    return raw.astype(np.float64) / UINT16_MAX * 2.0 - 1.0


def mask_to_uint16(values: np.ndarray) -> np.ndarray:
    return np.where(values >= 0.5, UINT16_MAX, 0).astype(np.uint16)


def uint16_to_mask(raw: np.ndarray) -> np.ndarray:
    return (raw >= UINT16_MAX // 2).astype(np.float64)


def write_png16(path: Path, raw: np.ndarray) -> None:
    if raw.dtype != np.uint16 or raw.ndim != 2:
        raise ValueError(f"expected a 2D uint16 array, got {raw.dtype} {raw.shape}")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(raw).save(path, format="PNG")


def read_png16(path: Path) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"Raster not found: {path}")
    with Image.open(path) as img:
        raw = np.asarray(img)
    if raw.ndim != 2:
        raise ValueError(f"{path} is not a single-channel raster")
    return raw.astype(np.uint16)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_mask_png(path: Path, values: np.ndarray) -> None:
    write_png16(path, mask_to_uint16(values))


def read_mask_png(path: Path) -> np.ndarray:
    return uint16_to_mask(read_png16(path))
