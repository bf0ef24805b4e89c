"""Data generation node: synthetic splits written as manifests plus 16-bit rasters"""

from pathlib import Path

import numpy as np

from ..evalstat import lesion_area_histogram
from ..models.phantom import DatasetManifest, LesionClass, PairedSample, Split
from ..models.run import RunConfig
from ..phantom import generate_split, write_dataset
from ..utils.json_store import JSONStore


class DataNode:
    """Generate train/val/test (and optionally external) splits"""

    def __init__(self, config: RunConfig, json_store: JSONStore):
        self.config = config
        self.json_store = json_store

    def run(self) -> dict[Split, DatasetManifest]:
        """Execute data generation

        Returns:
            Manifest per written split
        """
        print("\n=== Phase: Data generation ===")
        data = self.config.data
        counts = dict(zip((Split.TRAIN, Split.VAL, Split.TEST), data.split, strict=True))
        if data.n_external:
            counts[Split.EXTERNAL] = data.n_external
        print(f"Splits: {', '.join(f'{split}={n}' for split, n in counts.items())}")
        print(f"ROI: {data.roi_size}px at {data.target_spacing} mm/px")

        manifests: dict[Split, DatasetManifest] = {}
        generated: list[PairedSample] = []
        summary: dict[str, dict] = {}
        for split, count in counts.items():
            spec = data.external_phantom if split == Split.EXTERNAL else data.phantom
            samples = generate_split(
                spec, split, count, self.config.seed, data.target_spacing, data.roi_size
            )
            manifests[split] = write_dataset(
                samples, split, self.config.seed, self.config.data_dir / split
            )
            summary[split] = self._summarize(samples)
            generated.extend(samples)
            print(f"  {split}: {count} samples")

        if generated:
            lesion_area_histogram(generated, self.config.data_dir / "lesion_areas.png")
        self.json_store.write("data-summary.json", summary)

        print("\n✅ Data generation complete:")
        print(f"   Samples: {len(generated)}")
        print(f"   Location: {self.config.data_dir}")
        return manifests

    @staticmethod
    def _summarize(samples: list[PairedSample]) -> dict:
        areas = [s.mask.foreground * s.image.spacing**2 for s in samples]
        return {
            "n": len(samples),
            "benign": sum(s.lesion_class == LesionClass.BENIGN for s in samples),
            "malignant": sum(s.lesion_class == LesionClass.MALIGNANT for s in samples),
            "mean_area_mm2": float(np.mean(areas)) if areas else None,
        }


def manifest_or_raise(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found: {path} (run gen-data first)")
    return path
