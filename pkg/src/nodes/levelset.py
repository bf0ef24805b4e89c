"""Level-set baseline node: fit parameters on training samples, segment a test manifest"""

from pathlib import Path

from ..gac import fit_params, segment_levelset
from ..models.gac import LevelSetParams, LevelSetSection
from ..phantom import load_samples
from ..utils.json_store import JSONStore
from ..utils.raster_io import write_mask_png


class LevelSetNode:
    """Geodesic active contour baseline"""

    def __init__(
        self,
        section: LevelSetSection,
        train_manifest: Path,
        test_manifests: list[Path],
        out_dir: Path,
        json_store: JSONStore,
        jobs: int = 1,
    ):
        self.section = section
        self.train_manifest = train_manifest
        self.test_manifests = test_manifests
        self.out_dir = out_dir
        self.json_store = json_store
        self.jobs = jobs

    def run(self) -> tuple[LevelSetParams, list[Path]]:
        """Execute fitting and segmentation

        Returns:
            Fitted parameters and one mask directory per test manifest
        """
        print("\n=== Phase: Level-set baseline ===")
        train = load_samples(self.train_manifest)
        if self.section.fit_subset:
            train = train[: self.section.fit_subset]
        grid = self.section.grid
        print(f"Fitting on {len(train)} samples, {grid.size()} grid points ({self.section.strategy})")

        params = fit_params(
            train,
            grid,
            strategy=self.section.strategy,
            max_rounds=self.section.max_rounds,
            jobs=self.jobs,
        )
        self.json_store.write("levelset-params.json", params)
        print(
            f"  steps={params.steps} epsilon={params.epsilon} alpha={params.alpha} sigma={params.sigma}"
        )

        mask_dirs = []
        for manifest in self.test_manifests:
            samples = load_samples(manifest)
            split = manifest.parent.name
            mask_dir = self.out_dir / split / "masks"
            for sample in samples:
                write_mask_png(mask_dir / f"{sample.id}.png", segment_levelset(sample.image, params).values)
            mask_dirs.append(mask_dir)
            print(f"  {split}: {len(samples)} masks")

        print("\n✅ Level-set baseline complete:")
        print(f"   Params: {self.out_dir / 'levelset-params.json'}")
        return params, mask_dirs
