"""Training node: fit one regime and store its checkpoint and logs"""

from pathlib import Path

from ..config import settings
from ..models.losses import Regime
from ..models.netzoo import Backbone
from ..models.phantom import Split
from ..models.run import RunConfig
from ..phantom import load_samples
from ..trainer import train
from ..utils.json_store import JSONStore
from .data import manifest_or_raise


class TrainingNode:
    """Train the configured regime on the train split, select on the val split"""

    def __init__(
        self,
        config: RunConfig,
        out_dir: Path,
        json_store: JSONStore,
        regime: Regime | None = None,
        backbone: Backbone | None = None,
    ):
        self.config = config
        self.out_dir = out_dir
        self.json_store = json_store
        generator = config.train.generator
        if backbone is not None:
            generator = generator.model_copy(update={"backbone": backbone})
        self.train_config = config.train.model_copy(
            update={"regime": regime or config.train.regime, "seed": config.seed, "generator": generator}
        )

    @property
    def checkpoint_path(self) -> Path:
        return self.out_dir / "checkpoint.pt"

    def run(self) -> Path:
        """Execute training

        Returns:
            Path of the saved checkpoint
        """
        cfg = self.train_config
        print(f"\n=== Phase: Training ({cfg.regime}) ===")
        train_set = load_samples(manifest_or_raise(self.config.manifest_path(Split.TRAIN)))
        val_path = self.config.manifest_path(Split.VAL)
        val_set = load_samples(val_path) if val_path.exists() else []
        print(f"Backbone: {cfg.generator.backbone}, epochs: {cfg.epochs}, lr: {cfg.lr}")
        print(f"Samples: train={len(train_set)}, val={len(val_set)}")

        checkpoint, log = train(train_set, val_set, cfg)
        checkpoint.save(self.checkpoint_path)
        log.write_csv(self.out_dir, settings.csv_float_format)
        self.json_store.write(
            "train-summary.json",
            {
                "regime": cfg.regime,
                "backbone": cfg.generator.backbone,
                "selected_epoch": checkpoint.epoch,
                "val_loss": checkpoint.val_loss,
                "val_dice": checkpoint.extra.get("val_dice"),
                "iterations": len(log.iterations),
            },
        )

        print("\n✅ Training complete:")
        print(f"   Selected epoch: {checkpoint.epoch}")
        if checkpoint.val_loss is not None:
            print(f"   Validation loss: {checkpoint.val_loss:.4f}")
        print(f"   Checkpoint: {self.checkpoint_path}")
        return self.checkpoint_path
