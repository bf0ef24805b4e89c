"""Evaluation node: score mask directories against ground truth and emit the report"""

from pathlib import Path

import numpy as np

from ..evalstat import OVERLAY_CASES, build_report, emit_report, overlay_figure, score_masks
from ..models.evalstat import ALL_CLASSES, DiceRecord, EvalReport
from ..phantom import load_samples
from ..utils.json_store import JSONStore
from ..utils.raster_io import read_mask_png


class EvaluationNode:
    """DSC per sample and method, grouped statistics and one-sided paired t-tests"""

    def __init__(
        self,
        methods: dict[str, Path],
        manifest_path: Path,
        out_dir: Path,
        json_store: JSONStore,
        comparisons: list[tuple[str, str]] | None = None,
        alpha: float = 0.05,
    ):
        self.methods = methods
        self.manifest_path = manifest_path
        self.out_dir = out_dir
        self.json_store = json_store
        self.comparisons = comparisons or []
        self.alpha = alpha

    def run(self) -> EvalReport:
        print("\n=== Phase: Evaluation ===")
        if not self.methods:
            raise ValueError("no methods to evaluate (configure eval.methods or segment first)")
        unknown = {m for pair in self.comparisons for m in pair} - self.methods.keys()
        if unknown:
            raise ValueError(f"comparisons reference unknown methods: {sorted(unknown)}")

        samples = load_samples(self.manifest_path)
        print(f"Test samples: {len(samples)}, methods: {', '.join(sorted(self.methods))}")

        records: list[DiceRecord] = []
        shown: dict[str, dict[str, np.ndarray]] = {}
        for method, mask_dir in sorted(self.methods.items()):
            shown[method] = {}
            for index, sample in enumerate(samples):
                path = mask_dir / f"{sample.id}.png"
                if not path.exists():
                    raise FileNotFoundError(f"{method}: missing mask for sample {sample.id} ({path})")
                pred = read_mask_png(path)
                records.append(score_masks(sample.id, method, pred, sample.mask.values, sample.lesion_class))
                if index < OVERLAY_CASES:
                    shown[method][sample.id] = pred

        report = build_report(records, self.comparisons, self.alpha)
        emit_report(report, self.out_dir)
        if samples:
            overlay_figure(samples, shown, self.out_dir / "overlays.png")
        self.json_store.write("report.json", report)

        print("\n✅ Evaluation complete:")
        for method in report.methods():
            group = report.group(method, ALL_CLASSES)
            print(f"   {method}: DSC {group.mean:.3f}±{group.std:.3f} (n={group.n})")
        for test in report.tests:
            verdict = "degenerate" if test.degenerate else f"t={test.t:.3f} p={test.p:.4g}"
            print(f"   {test.method_a} > {test.method_b}: {verdict}")
        return report
