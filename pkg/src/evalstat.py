"""Dice scores, grouped statistics, paired t-tests, learning-curve sweeps and report files"""

import math
import warnings
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from scipy.special import betainc  # noqa: E402
from tqdm import tqdm  # noqa: E402

from .config import settings  # noqa: E402
from .errors import DegenerateSampleError, ShapeError, SweepCellError  # noqa: E402
from .models.evalstat import (  # noqa: E402
    ALL_CLASSES,
    DiceRecord,
    EvalReport,
    GroupStat,
    SweepRow,
    SweepSpec,
    TTestResult,
)
from .models.phantom import PairedSample, SegMask  # noqa: E402

DEGENERATE_RTOL = 1e-12

type MaskLike = SegMask | np.ndarray


def _binary(x: MaskLike) -> np.ndarray:
    values = x.values if isinstance(x, SegMask) else np.asarray(x)
    if values.dtype == bool:
        return values
    if not np.all((values == 0) | (values == 1)):
        raise ValueError("dice needs binarized masks")
    return values.astype(bool)


def dice(x: MaskLike, y: MaskLike) -> float:
    """2|X∩Y| / (|X| + |Y|); two empty masks agree perfectly (1.0)"""
    a, b = _binary(x), _binary(y)
    if a.shape != b.shape:
        raise ShapeError(f"mask shapes differ: {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


def score_masks(
    sample_id: str, method: str, pred: MaskLike, gt: MaskLike, lesion_class: str
) -> DiceRecord:
    a, b = _binary(pred), _binary(gt)
    empty = not a.any() and not b.any()
    if empty:
        warnings.warn(f"{method}/{sample_id}: both masks empty, DSC set to 1", stacklevel=2)
    return DiceRecord(
        sample_id=sample_id,
        method=method,
        dsc=dice(a, b),
        lesion_class=str(lesion_class),
        empty_agreement=empty,
    )


def _group(method: str, lesion_class: str, values: list[float]) -> GroupStat:
    n = len(values)
    singleton = n == 1
    if singleton:
        warnings.warn(f"group ({method}, {lesion_class}) has a single record; std set to 0", stacklevel=3)
    return GroupStat(
        method=method,
        lesion_class=lesion_class,
        mean=float(np.mean(values)),
        std=0.0 if singleton else float(np.std(values, ddof=1)),
        n=n,
        singleton=singleton,
    )


def aggregate(records: Sequence[DiceRecord]) -> list[GroupStat]:
    """Mean and (n-1) std per (method, class) and per (method, all)"""
    if not records:
        raise ValueError("aggregate needs at least one record")
    frame = pd.DataFrame([r.model_dump() for r in records])
    stats = []
    for method, by_method in frame.groupby("method", sort=True):
        for lesion_class, by_class in by_method.groupby("lesion_class", sort=True):
            stats.append(_group(str(method), str(lesion_class), by_class["dsc"].tolist()))
        stats.append(_group(str(method), ALL_CLASSES, by_method["dsc"].tolist()))
    return stats


def paired_ttest_one_sided(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """One-sided paired t-test of mean(a - b) > 0; returns (t, p)"""
    if len(a) != len(b):
        raise ShapeError(f"paired samples differ in length: {len(a)} vs {len(b)}")
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    n = d.size
    if n < 2:
        raise DegenerateSampleError(f"paired t-test needs n >= 2, got {n}")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd <= DEGENERATE_RTOL * max(1.0, abs(mean)):
        raise DegenerateSampleError("differences have zero variance; no test statistic")
    t = mean * math.sqrt(n) / sd
    nu = n - 1
    # P(T > |t|) through the regularized incomplete beta function
    tail = 0.5 * float(betainc(nu / 2.0, 0.5, nu / (nu + t * t)))
    p = tail if t >= 0 else 1.0 - tail
    return t, p


def _paired_values(
    records: Sequence[DiceRecord], method_a: str, method_b: str
) -> tuple[list[float], list[float]]:
    a = {r.sample_id: r.dsc for r in records if r.method == method_a}
    b = {r.sample_id: r.dsc for r in records if r.method == method_b}
    shared = sorted(a.keys() & b.keys())
    return [a[i] for i in shared], [b[i] for i in shared]


def build_report(
    records: Sequence[DiceRecord],
    comparisons: Iterable[tuple[str, str]] = (),
    alpha: float = 0.05,
) -> EvalReport:
    """Group statistics plus one test per ordered (a, b) comparison, paired by sample id"""
    tests = []
    for method_a, method_b in comparisons:
        a, b = _paired_values(records, method_a, method_b)
        try:
            t, p = paired_ttest_one_sided(a, b)
            tests.append(TTestResult(method_a=method_a, method_b=method_b, t=t, p=p, alpha=alpha, n=len(a)))
        except DegenerateSampleError as e:
            warnings.warn(f"{method_a} vs {method_b}: {e}", stacklevel=2)
            tests.append(
                TTestResult(
                    method_a=method_a, method_b=method_b, t=math.nan, p=math.nan,
                    alpha=alpha, n=len(a), degenerate=True,
                )
            )
    return EvalReport(records=list(records), group_stats=aggregate(records), tests=tests)


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=settings.csv_float_format, lineterminator="\n")
    return path


def records_frame(report: EvalReport) -> pd.DataFrame:
    rows = [
        {"sample_id": r.sample_id, "method": r.method, "class": r.lesion_class, "dsc": r.dsc}
        for r in report.records
    ]
    return pd.DataFrame(rows, columns=["sample_id", "method", "class", "dsc"])


def groups_frame(report: EvalReport) -> pd.DataFrame:
    rows = [
        {"method": g.method, "class": g.lesion_class, "mean": g.mean, "std": g.std, "n": g.n}
        for g in report.group_stats
    ]
    return pd.DataFrame(rows, columns=["method", "class", "mean", "std", "n"])


def tests_frame(report: EvalReport) -> pd.DataFrame:
    rows = [
        {"a": t.method_a, "b": t.method_b, "t": t.t, "p": t.p, "alpha": t.alpha, "reject": t.reject}
        for t in report.tests
    ]
    return pd.DataFrame(rows, columns=["a", "b", "t", "p", "alpha", "reject"])


def boxplot(ax: plt.Axes, report: EvalReport) -> dict:
    """One DSC box per method; returns matplotlib's artist dict"""
    methods = report.methods()
    data = [[r.dsc for r in report.records if r.method == m] for m in methods]
    parts = ax.boxplot(data, tick_labels=methods)
    ax.set_ylabel("DSC")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, axis="y", alpha=0.3)
    return parts


def emit_report(report: EvalReport, outdir: Path) -> list[Path]:
    """records.csv, groups.csv, tests.csv (when tests exist) and boxplot.png"""
    outdir.mkdir(parents=True, exist_ok=True)
    written = [
        _write_csv(records_frame(report), outdir / "records.csv"),
        _write_csv(groups_frame(report), outdir / "groups.csv"),
    ]
    if report.tests:
        written.append(_write_csv(tests_frame(report), outdir / "tests.csv"))

    fig, ax = plt.subplots(figsize=(max(4.0, 1.5 * len(report.methods())), 4.0))
    boxplot(ax, report)
    ax.set_title("DSC per method")
    fig.tight_layout()
    path = outdir / "boxplot.png"
    fig.savefig(path, dpi=settings.plot_dpi)
    plt.close(fig)
    written.append(path)
    return written


OVERLAY_CASES = 4


def _outline(ax: plt.Axes, mask: np.ndarray, color: str, linestyle: str = "solid") -> None:
    if mask.any() and not mask.all():
        ax.contour(mask.astype(np.float64), levels=[0.5], colors=color, linewidths=1.0, linestyles=linestyle)


def draw_overlays(
    axes: np.ndarray, samples: Sequence[PairedSample], predictions: dict[str, dict[str, MaskLike]]
) -> list[float]:
    """Fill a cases x (2 + methods) grid: image, ground truth, then each method's mask

    Ground truth is outlined in green on every panel after the first; a method's mask
    is outlined in red and its DSC written under the panel. Returns those DSCs row by row.
    """
    methods = sorted(predictions)
    if axes.shape != (len(samples), 2 + len(methods)):
        raise ShapeError(f"axes grid {axes.shape} does not fit {len(samples)} cases and {len(methods)} methods")
    scores: list[float] = []
    for row, sample in zip(axes, samples, strict=True):
        truth = sample.mask.values >= 0.5
        for ax in row:
            ax.imshow(sample.image.values, cmap="gray", vmin=-1.0, vmax=1.0)
            ax.set_xticks([])
            ax.set_yticks([])
        row[0].set_ylabel(sample.id)
        _outline(row[1], truth, "lime")
        for ax, method in zip(row[2:], methods, strict=True):
            if sample.id not in predictions[method]:
                raise ValueError(f"{method}: no mask for sample {sample.id}")
            pred = _binary(predictions[method][sample.id])
            _outline(ax, truth, "lime", linestyle="dashed")
            _outline(ax, pred, "red")
            score = dice(pred, truth)
            ax.set_xlabel(f"DSC {score:.3f}")
            scores.append(score)
    for ax, title in zip(axes[0], ["image", "ground truth", *methods], strict=True):
        ax.set_title(title)
    return scores


def overlay_figure(
    samples: Sequence[PairedSample], predictions: dict[str, dict[str, MaskLike]], path: Path
) -> Path:
    """Qualitative comparison figure for the first few cases"""
    cases = list(samples[:OVERLAY_CASES])
    if not cases:
        raise ValueError("overlay figure needs at least one sample")
    n_cols = 2 + len(predictions)
    fig, axes = plt.subplots(len(cases), n_cols, figsize=(2.2 * n_cols, 2.2 * len(cases)), squeeze=False)
    draw_overlays(axes, cases, predictions)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=settings.plot_dpi)
    plt.close(fig)
    return path


def backbone_table(report: EvalReport, cells: dict[str, tuple[str, str]]) -> pd.DataFrame:
    """Regimes x backbones table of "mean±std" over all classes

    ``cells`` maps each trained method name to its (regime, backbone) pair;
    methods missing from the report are left blank.
    """
    table: dict[str, dict[str, str]] = {}
    for method, (regime, backbone) in cells.items():
        g = report.group(method, ALL_CLASSES)
        if g is not None:
            table.setdefault(str(regime), {})[str(backbone)] = f"{g.mean:.2f}±{g.std:.2f}"
    frame = pd.DataFrame.from_dict(table, orient="index")
    frame.index.name = "regime"
    return frame.sort_index().reindex(sorted(frame.columns), axis=1)


# sweeps


def nested_subsets(pool_size: int, sizes: Sequence[int], seed: int) -> dict[int, list[int]]:
    """Prefixes of one seeded permutation, so smaller subsets nest in larger ones"""
    too_large = [s for s in sizes if s > pool_size]
    if too_large:
        raise ValueError(f"training sizes {too_large} exceed the pool of {pool_size}")
    order = np.random.default_rng(seed).permutation(pool_size)
    return {size: sorted(int(i) for i in order[:size]) for size in sizes}


type CellRunner = Callable[[list[PairedSample], str, int], list[float]]


def run_sweep(
    pool: Sequence[PairedSample],
    test_set: Sequence[PairedSample],
    spec: SweepSpec,
    run_cell: CellRunner,
    jobs: int = 1,
) -> pd.DataFrame:
    """Train and test one model per (size, regime, seed) cell

    ``run_cell(train_subset, regime, seed)`` returns the per-sample DSC on the
    fixed test set. With ``jobs > 1`` cells run on a thread pool; the table does
    not depend on the number of workers as long as ``run_cell`` seeds its own
    random streams.
    """
    if not test_set:
        raise ValueError("sweep needs a non-empty test set")
    cells = []
    for seed in spec.seeds:
        subsets = nested_subsets(len(pool), spec.training_sizes, seed)
        for regime in spec.regimes:
            for size in spec.training_sizes:
                cells.append((size, str(regime), seed, [pool[i] for i in subsets[size]]))

    def evaluate(cell: tuple[int, str, int, list[PairedSample]]) -> dict:
        size, regime, seed, subset = cell
        try:
            scores = run_cell(subset, regime, seed)
        except Exception as e:
            raise SweepCellError(size, regime, seed, e) from e
        return SweepRow(
            size=size,
            regime=regime,
            seed=seed,
            mean_dsc=float(np.mean(scores)),
            std_dsc=float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0,
            n_test=len(scores),
        ).model_dump()

    rows = []
    with (
        tqdm(total=len(cells), desc="sweep", leave=False) as bar,
        ThreadPoolExecutor(max(1, jobs)) as executor,
    ):
        for row in executor.map(evaluate, cells) if jobs > 1 else map(evaluate, cells):
            rows.append(row)
            bar.update()
    frame = pd.DataFrame(rows, columns=list(SweepRow.model_fields))
    return frame.sort_values(["regime", "size", "seed"], kind="stable").reset_index(drop=True)


def sweep_summary(table: pd.DataFrame) -> pd.DataFrame:
    """Sizes x regimes table of "mean±std" over seeds"""
    stats = table.groupby(["size", "regime"])["mean_dsc"].agg(["mean", "std"]).fillna(0.0)
    cells = stats.apply(lambda r: f"{r['mean']:.3f}±{r['std']:.3f}", axis=1)
    return cells.unstack("regime")


def learning_curve(ax: plt.Axes, table: pd.DataFrame) -> None:
    stats = table.groupby(["regime", "size"])["mean_dsc"].agg(["mean", "std"]).fillna(0.0)
    for regime, frame in stats.groupby(level="regime"):
        sizes = frame.index.get_level_values("size")
        ax.errorbar(sizes, frame["mean"], yerr=frame["std"], marker="o", capsize=3, label=regime)
    ax.set_xlabel("training samples")
    ax.set_ylabel("mean DSC")
    ax.grid(True, alpha=0.3)
    ax.legend()


def emit_sweep(table: pd.DataFrame, outdir: Path) -> list[Path]:
    """sweep.csv (long), sweep_table.csv (sizes x regimes) and learning_curve.png"""
    outdir.mkdir(parents=True, exist_ok=True)
    written = [
        _write_csv(table, outdir / "sweep.csv"),
        _write_csv(sweep_summary(table).reset_index(), outdir / "sweep_table.csv"),
    ]
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    learning_curve(ax, table)
    fig.tight_layout()
    path = outdir / "learning_curve.png"
    fig.savefig(path, dpi=settings.plot_dpi)
    plt.close(fig)
    written.append(path)
    return written


def lesion_area_histogram(samples: Sequence[PairedSample], path: Path, bins: int = 20) -> Path:
    """Histogram of lesion areas in mm², split by class"""
    areas: dict[str, list[float]] = {}
    for s in samples:
        area = s.mask.foreground * s.image.spacing**2
        areas.setdefault(str(s.lesion_class), []).append(area)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    for lesion_class in sorted(areas):
        ax.hist(areas[lesion_class], bins=bins, alpha=0.6, label=lesion_class)
    ax.set_xlabel("lesion area (mm²)")
    ax.set_ylabel("samples")
    ax.legend()
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=settings.plot_dpi)
    plt.close(fig)
    return path


def load_records(path: Path) -> list[DiceRecord]:
    """Read a records.csv back into DiceRecords"""
    if not path.exists():
        raise FileNotFoundError(f"Records not found: {path}")
    frame = pd.read_csv(path, dtype={"sample_id": str, "method": str, "class": str})
    return [
        DiceRecord(sample_id=row.sample_id, method=row.method, dsc=float(row.dsc), lesion_class=row[2])
        for row in frame.itertuples(index=False)
    ]


def plot_training_log(frame: pd.DataFrame, path: Path) -> Path:
    """Per-epoch mean of each loss term"""
    terms = ["adv_forward", "adv_backward", "cyc", "pix", "total"]
    per_epoch = frame.groupby("epoch")[terms].mean()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for term in terms:
        if per_epoch[term].abs().sum() > 0:
            ax.plot(per_epoch.index, per_epoch[term], label=term)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("symlog", linthresh=1e-3)
    ax.legend()
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=settings.plot_dpi)
    plt.close(fig)
    return path
