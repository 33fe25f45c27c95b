from .core import FrequencyBasis, apply_rope, make_basis, rope_score, rotate_batch
from .scaling import (
    AlphaSchedule,
    alpha,
    chain_fold,
    chain_step,
    fixed_basis,
    log_basis,
    scale_basis,
    position_basis_deviation,
)
from .positions import PositionSchedule, random_positions, sample_positions, uniform_positions

__all__ = [
    "FrequencyBasis",
    "apply_rope",
    "make_basis",
    "rope_score",
    "rotate_batch",
    "AlphaSchedule",
    "alpha",
    "chain_fold",
    "chain_step",
    "fixed_basis",
    "log_basis",
    "scale_basis",
    "position_basis_deviation",
    "PositionSchedule",
    "random_positions",
    "sample_positions",
    "uniform_positions",
]
