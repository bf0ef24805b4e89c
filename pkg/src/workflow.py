"""End-to-end benchmark: data, every regime, the level-set baseline, evaluation"""

from datetime import datetime

from .config import settings
from .evalstat import backbone_table
from .models.evalstat import EvalReport
from .models.losses import Regime
from .models.netzoo import Backbone
from .models.phantom import Split
from .models.run import RunConfig
from .models.workflow import WorkflowDeps, WorkflowState
from .nodes import DataNode, EvaluationNode, LevelSetNode, SegmentationNode, TrainingNode
from .utils.json_store import JSONStore

LEVELSET_METHOD = "levelset"


class BenchmarkWorkflow:
    """Runs the scaled comparison of SPCGAN, its ablations and the level-set baseline"""

    def __init__(self, deps: WorkflowDeps):
        self.deps = deps
        self.state = WorkflowState()

    @property
    def config(self) -> RunConfig:
        return self.deps.config

    def run(self) -> WorkflowState:
        """Execute every phase in order

        Returns:
            Final workflow state
        """
        print("=" * 60)
        print("SPCGAN segmentation benchmark")
        print("=" * 60)
        print(f"Regimes: {', '.join(str(r) for r in self.config.regimes)}")
        print(f"Backbones: {', '.join(str(b) for b in self.config.backbone_list())}")
        print(f"Device: {settings.device}")

        print("\n[Phase 1/4] Data - Generating phantoms...")
        self.state.manifests = DataNode(self.config, JSONStore(self.config.data_dir)).run()
        print(f"✓ Wrote {len(self.state.manifests)} splits")

        print("\n[Phase 2/4] Training - Fitting each regime...")
        for backbone in self.config.backbone_list():
            for regime in self.config.regimes:
                self._run_regime(regime, backbone)
        print(f"✓ Trained {len(self.state.checkpoints)} models")

        print("\n[Phase 3/4] Level set - Fitting the baseline...")
        self._run_levelset()
        print("✓ Level-set baseline done")

        print("\n[Phase 4/4] Evaluation - Scoring test sets...")
        self.state.report = self._evaluate(self.state.mask_dirs, Split.TEST, "eval")
        if self.state.external_mask_dirs:
            self.state.external_report = self._evaluate(
                self.state.external_mask_dirs, Split.EXTERNAL, "eval-external"
            )
        print("✓ Reports written")

        elapsed = (datetime.now() - self.state.workflow_start_time).total_seconds()
        print("\n" + "=" * 60)
        print(f"Benchmark complete in {elapsed:.1f}s")
        print("=" * 60)
        return self.state

    def _test_splits(self) -> list[Split]:
        return [s for s in (Split.TEST, Split.EXTERNAL) if s in self.state.manifests]

    def _method_name(self, regime: Regime, backbone: Backbone) -> str:
        if len(self.config.backbone_list()) == 1:
            return str(regime)
        return f"{regime}-{backbone}"

    def _run_regime(self, regime: Regime, backbone: Backbone) -> None:
        method = self._method_name(regime, backbone)
        train_dir = self.deps.out_dir / "train" / method
        checkpoint = TrainingNode(self.config, train_dir, JSONStore(train_dir), regime, backbone).run()
        self.state.checkpoints[method] = checkpoint
        self.state.trained[method] = (regime, backbone)
        for split in self._test_splits():
            mask_dir = SegmentationNode(
                checkpoint,
                self.config.manifest_path(split),
                self.deps.out_dir / "segment" / method / split,
            ).run()
            target = self.state.mask_dirs if split == Split.TEST else self.state.external_mask_dirs
            target[method] = mask_dir

    def _run_levelset(self) -> None:
        out_dir = self.deps.out_dir / "levelset"
        splits = self._test_splits()
        params, mask_dirs = LevelSetNode(
            self.config.levelset,
            self.config.manifest_path(Split.TRAIN),
            [self.config.manifest_path(s) for s in splits],
            out_dir,
            JSONStore(out_dir),
            jobs=self.deps.jobs,
        ).run()
        self.state.levelset_params = params
        for split, mask_dir in zip(splits, mask_dirs, strict=True):
            target = self.state.mask_dirs if split == Split.TEST else self.state.external_mask_dirs
            target[LEVELSET_METHOD] = mask_dir

    def _comparisons(self, methods: dict) -> list[tuple[str, str]]:
        if self.config.eval.comparisons:
            return [(a, b) for a, b in self.config.eval.comparisons if a in methods and b in methods]
        refs = [
            m for m, (regime, _) in self.state.trained.items() if regime == Regime.SPCGAN and m in methods
        ]
        return [(ref, m) for ref in refs for m in sorted(methods) if m not in refs]

    def _evaluate(self, methods: dict, split: Split, name: str) -> EvalReport:
        out_dir = self.deps.out_dir / name
        report = EvaluationNode(
            methods,
            self.config.manifest_path(split),
            out_dir,
            JSONStore(out_dir),
            comparisons=self._comparisons(methods),
            alpha=self.config.eval.alpha,
        ).run()
        table = backbone_table(report, self.state.trained)
        table.to_csv(out_dir / "backbone_table.csv", lineterminator="\n")
        return report


def create_workflow(config: RunConfig, jobs: int = 1) -> BenchmarkWorkflow:
    """Create a configured benchmark workflow

    Args:
        config: Resolved run configuration
        jobs: Worker threads for level-set fitting

    Returns:
        Configured workflow instance
    """
    deps = WorkflowDeps(config=config, json_store=JSONStore(config.out_dir), jobs=jobs)
    return BenchmarkWorkflow(deps)
