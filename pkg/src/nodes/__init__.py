"""Phase nodes, one per CLI command"""

from .data import DataNode
from .evaluation import EvaluationNode
from .levelset import LevelSetNode
from .plotting import PlottingNode
from .segmentation import SegmentationNode
from .sweep import SweepNode
from .training import TrainingNode

__all__ = [
    "DataNode",
    "TrainingNode",
    "SegmentationNode",
    "LevelSetNode",
    "EvaluationNode",
    "SweepNode",
    "PlottingNode",
]
