"""Plotting node: redraw figures from the CSV tables of earlier phases"""

from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

from ..config import settings
from ..evalstat import boxplot, build_report, learning_curve, load_records, plot_training_log


class PlottingNode:
    """Regenerate boxplot, learning curve and loss curves that have source tables"""

    def __init__(self, report_dir: Path, out_dir: Path, train_dirs: list[Path] | None = None):
        self.report_dir = report_dir
        self.out_dir = out_dir
        self.train_dirs = train_dirs or []

    def run(self) -> list[Path]:
        print("\n=== Phase: Plotting ===")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []

        records_path = self.report_dir / "records.csv"
        if records_path.exists():
            report = build_report(load_records(records_path))
            fig, ax = plt.subplots(figsize=(max(4.0, 1.5 * len(report.methods())), 4.0))
            boxplot(ax, report)
            written.append(self._save(fig, "boxplot.png"))

        sweep_path = self.report_dir / "sweep.csv"
        if sweep_path.exists():
            fig, ax = plt.subplots(figsize=(5.0, 4.0))
            learning_curve(ax, pd.read_csv(sweep_path))
            written.append(self._save(fig, "learning_curve.png"))

        for train_dir in self.train_dirs:
            log_path = train_dir / "train_log.csv"
            if log_path.exists():
                frame = pd.read_csv(log_path)
                if not frame.empty:
                    written.append(
                        plot_training_log(frame, self.out_dir / f"losses-{train_dir.name}.png")
                    )

        if not written:
            raise FileNotFoundError(f"No records.csv, sweep.csv or train_log.csv under {self.report_dir}")

        print("\n✅ Plotting complete:")
        for path in written:
            print(f"   {path}")
        return written

    def _save(self, fig: plt.Figure, name: str) -> Path:
        fig.tight_layout()
        path = self.out_dir / name
        fig.savefig(path, dpi=settings.plot_dpi)
        plt.close(fig)
        return path
