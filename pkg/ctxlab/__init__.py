__version__ = "0.1.0"

from .config import Config
from .errors import (
    CheckpointError,
    ConfigError,
    CtxLabError,
    InvalidArgumentError,
    NumericOverflowError,
    OutOfRangeError,
    TrainingDivergedError,
)
from .rope import FrequencyBasis, make_basis

__all__ = [
    "__version__",
    "Config",
    "CheckpointError",
    "ConfigError",
    "CtxLabError",
    "InvalidArgumentError",
    "NumericOverflowError",
    "OutOfRangeError",
    "TrainingDivergedError",
    "FrequencyBasis",
    "make_basis",
]
