"""Sweep node: learning curves over training-set size"""

from pathlib import Path

import pandas as pd

from ..evalstat import dice, emit_sweep, run_sweep
from ..models.losses import Regime
from ..models.phantom import PairedSample, Split
from ..models.run import RunConfig
from ..phantom import load_samples
from ..trainer import segment_batch, train
from ..utils.json_store import JSONStore
from .data import manifest_or_raise


class SweepNode:
    """One training run per (size, regime, seed) cell, tested on the fixed test split"""

    def __init__(self, config: RunConfig, out_dir: Path, json_store: JSONStore, jobs: int = 1):
        self.config = config
        self.out_dir = out_dir
        self.json_store = json_store
        self.jobs = jobs

    def run(self) -> pd.DataFrame:
        print("\n=== Phase: Training-size sweep ===")
        spec = self.config.sweep
        pool = load_samples(manifest_or_raise(self.config.manifest_path(Split.TRAIN)))
        val_path = self.config.manifest_path(Split.VAL)
        val_set = load_samples(val_path) if val_path.exists() else []
        test_set = load_samples(manifest_or_raise(self.config.manifest_path(Split.TEST)))
        print(
            f"Sizes: {spec.training_sizes}, regimes: {[str(r) for r in spec.regimes]}, "
            f"seeds: {spec.seeds}, backbone: {spec.backbone}, jobs: {self.jobs}"
        )

        def run_cell(subset: list[PairedSample], regime: str, seed: int) -> list[float]:
            generator = self.config.train.generator.model_copy(update={"backbone": spec.backbone})
            cfg = self.config.train.model_copy(
                update={"regime": Regime(regime), "seed": seed, "generator": generator}
            )
            checkpoint, _ = train(subset, val_set, cfg)
            masks = segment_batch([s.image for s in test_set], checkpoint)
            return [dice(m.values, s.mask.values) for m, s in zip(masks, test_set, strict=True)]

        table = run_sweep(pool, test_set, spec, run_cell, jobs=self.jobs)
        emit_sweep(table, self.out_dir)
        self.json_store.write("sweep-spec.json", spec)

        print("\n✅ Sweep complete:")
        print(f"   Cells: {len(table)}")
        print(f"   Table: {self.out_dir / 'sweep_table.csv'}")
        return table
