"""Exception hierarchy shared by all modules"""


class SegmentationError(Exception):
    """Base class for every error raised by this package"""


class SpecValidationError(SegmentationError, ValueError):
    """A parameter set violates its invariants; the message names the field"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ShapeError(SegmentationError, ValueError):
    """Array dimensions are incompatible with the operation"""


class DomainError(SegmentationError, ValueError):
    """An argument lies outside the domain of the operation"""


class ResourceLimitError(SegmentationError, RuntimeError):
    """The requested output would exceed a configured size cap"""


class NumericFaultError(SegmentationError, ArithmeticError):
    """A loss or network output became non-finite"""


class DegenerateSampleError(SegmentationError, ValueError):
    """A statistical test has no defined statistic (zero variance)"""


class ManifestError(SegmentationError, ValueError):
    """A dataset manifest is inconsistent with the files on disk"""


class SweepCellError(SegmentationError, RuntimeError):
    """A learning-curve cell failed; carries the cell coordinates"""

    def __init__(self, size: int, regime: str, seed: int, cause: Exception):
        self.size = size
        self.regime = regime
        self.seed = seed
        super().__init__(f"sweep cell (size={size}, regime={regime}, seed={seed}) failed: {cause}")
