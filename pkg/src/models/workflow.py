"""Benchmark state and dependencies"""

from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ..utils.json_store import JSONStore

from .evalstat import EvalReport
from .gac import LevelSetParams
from .losses import Regime
from .netzoo import Backbone
from .phantom import DatasetManifest, Split
from .run import RunConfig


@dataclass
class WorkflowState:
    """Artifacts accumulated across benchmark phases"""

    manifests: dict[Split, DatasetManifest] = field(default_factory=dict)
    checkpoints: dict[str, Path] = field(default_factory=dict)
    # method name -> (regime, backbone) of every trained model
    trained: dict[str, tuple[Regime, Backbone]] = field(default_factory=dict)
    mask_dirs: dict[str, Path] = field(default_factory=dict)
    external_mask_dirs: dict[str, Path] = field(default_factory=dict)
    levelset_params: LevelSetParams | None = None
    report: EvalReport | None = None
    external_report: EvalReport | None = None

    workflow_start_time: datetime = field(default_factory=datetime.now)


@dataclass
class WorkflowDeps:
    """Dependencies shared by all nodes of one run"""

    config: RunConfig
    json_store: "JSONStore"  # type: ignore
    jobs: int = 1

    @property
    def out_dir(self) -> Path:
        return self.config.out_dir
