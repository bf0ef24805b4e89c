"""End-to-end benchmark and small-data runs on synthetic phantoms

These train full models and are deselected by default (``pytest -m slow``).
"""

import numpy as np
import pytest
from src.models import (
    LevelSetGrid,
    LevelSetSection,
    PhantomSpec,
    Regime,
    RunConfig,
    Split,
    SweepSpec,
)
from src.models.netzoo import GeneratorConfig
from src.models.run import DataSection
from src.models.trainer import TrainConfig
from src.nodes import DataNode, SweepNode
from src.utils.json_store import JSONStore
from src.workflow import create_workflow

SMALL_GRID = LevelSetSection(
    grid=LevelSetGrid(epsilon=[0.1], alpha=[50.0], steps=[100, 200], sigma=[1.0]),
    fit_subset=4,
)


def _benchmark_config(
    out_dir, n_train: int, n_val: int, n_test: int, epochs: int, base_width: int
) -> RunConfig:
    return RunConfig(
        seed=0,
        out_dir=out_dir,
        data=DataSection(
            phantom=PhantomSpec(),
            n_total=n_train + n_val + n_test,
            split=(n_train, n_val, n_test),
            roi_size=64,
        ),
        train=TrainConfig(
            generator=GeneratorConfig(base_width=base_width),
            epochs=epochs,
            decay_start_epoch=epochs // 2,
            log_every=max(1, epochs // 10),
        ),
        regimes=[Regime.SPCGAN, Regime.FCN],
        levelset=SMALL_GRID,
    )


@pytest.mark.slow
def test_benchmark_spcgan_meets_target_and_beats_fcn(tmp_path):
    """60 / 20 / 40 phantoms at 64x64: SPCGAN reaches 0.85 mean DSC and is not below FCN"""
    config = _benchmark_config(tmp_path / "run", n_train=60, n_val=20, n_test=40, epochs=300, base_width=32)

    state = create_workflow(config).run()

    spcgan = state.report.group("spcgan").mean
    fcn = state.report.group("fcn").mean
    assert spcgan >= 0.85
    assert spcgan >= fcn


@pytest.mark.slow
def test_benchmark_rerun_is_byte_identical(tmp_path):
    """The same seed reproduces every report table byte for byte"""
    runs = []
    for name in ("a", "b"):
        config = _benchmark_config(
            tmp_path / name, n_train=6, n_val=4, n_test=6, epochs=3, base_width=4
        )
        runs.append(create_workflow(config).run())

    for table in ("records.csv", "groups.csv", "tests.csv"):
        a = (tmp_path / "a" / "eval" / table).read_bytes()
        b = (tmp_path / "b" / "eval" / table).read_bytes()
        assert a == b, table
    for method in ("spcgan", "fcn", "levelset"):
        means = [run.report.group(method).mean for run in runs]
        assert abs(means[0] - means[1]) <= 1e-6


@pytest.mark.slow
def test_small_training_set_spcgan_not_below_fcn(tmp_path):
    """With 12 training phantoms SPCGAN averages at least the FCN DSC over three seeds"""
    config = _benchmark_config(tmp_path / "run", n_train=12, n_val=20, n_test=40, epochs=300, base_width=32)
    config = config.model_copy(
        update={"sweep": SweepSpec(training_sizes=[12], regimes=[Regime.SPCGAN, Regime.FCN], seeds=[0, 1, 2])}
    )
    DataNode(config, JSONStore(config.data_dir)).run()
    assert config.manifest_path(Split.TEST).exists()

    table = SweepNode(config, tmp_path / "sweep", JSONStore(tmp_path / "sweep")).run()

    means = table.groupby("regime")["mean_dsc"].mean()
    assert len(table) == 6
    assert np.isfinite(means).all()
    assert means["spcgan"] >= means["fcn"]
