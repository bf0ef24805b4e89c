"""Pydantic models for every module and the run configuration"""

# Evaluation models
from .evalstat import (
    ALL_CLASSES,
    DiceRecord,
    EvalReport,
    GroupStat,
    SweepRow,
    SweepSpec,
    TTestResult,
)

# Level-set models
from .gac import LevelSetField, LevelSetGrid, LevelSetParams, LevelSetSection, SearchStrategy

# Loss models
from .losses import GanForm, LossReport, LossWeights, Regime

# Network models
from .netzoo import Backbone, DiscriminatorConfig, DiscriminatorKind, GeneratorConfig

# Phantom and dataset models
from .phantom import (
    AugConfig,
    DatasetManifest,
    GrayImage,
    LesionClass,
    ManifestEntry,
    PairedSample,
    PhantomSpec,
    Provenance,
    SegMask,
    Split,
)

# Run configuration
from .run import DataSection, EvalSection, RunConfig

# Training models
from .trainer import (
    Checkpoint,
    IterationRecord,
    TrainConfig,
    TrainLog,
    ValidationRecord,
    ValMetric,
)

__all__ = [
    # Phantom
    "AugConfig",
    "DatasetManifest",
    "GrayImage",
    "LesionClass",
    "ManifestEntry",
    "PairedSample",
    "PhantomSpec",
    "Provenance",
    "SegMask",
    "Split",
    # Networks
    "Backbone",
    "DiscriminatorConfig",
    "DiscriminatorKind",
    "GeneratorConfig",
    # Losses
    "GanForm",
    "LossReport",
    "LossWeights",
    "Regime",
    # Training
    "Checkpoint",
    "IterationRecord",
    "TrainConfig",
    "TrainLog",
    "ValidationRecord",
    "ValMetric",
    # Level set
    "LevelSetField",
    "LevelSetGrid",
    "LevelSetParams",
    "LevelSetSection",
    "SearchStrategy",
    # Evaluation
    "ALL_CLASSES",
    "DiceRecord",
    "EvalReport",
    "GroupStat",
    "SweepRow",
    "SweepSpec",
    "TTestResult",
    # Run
    "DataSection",
    "EvalSection",
    "RunConfig",
]
