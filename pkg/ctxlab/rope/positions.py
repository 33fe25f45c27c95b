"""Position extrapolation: spread L_train trained tokens over [1, t' * L]."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError
from ..utils.enum import SamplerMode


@dataclass(frozen=True)
class PositionSchedule:
    mode: SamplerMode
    l_train: int
    t_prime: float
    context_len: int
    positions: np.ndarray

    def __post_init__(self):
        positions = np.array(self.positions, dtype=np.float64)
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)

    def __len__(self) -> int:
        return self.positions.size


def _check(l_train: int, t_prime: float, context_len: int) -> None:
    if l_train < 1 or context_len < 1:
        raise InvalidArgumentError("L_train and L must be positive")
    if not math.isfinite(t_prime) or t_prime < 1.0:
        raise InvalidArgumentError(f"t' must be finite and >= 1, got {t_prime}")


def uniform_positions(l_train: int, t_prime: float, context_len: int) -> PositionSchedule:
    """Positions ``i * s`` for ``i = 1..L_train`` with ``s = t' * L / L_train``."""
    _check(l_train, t_prime, context_len)
    span = t_prime * context_len
    if span < l_train:
        raise InvalidArgumentError(
            f"t' * L = {span:g} is shorter than L_train = {l_train}"
        )
    stride = span / l_train
    positions = np.arange(1, l_train + 1, dtype=np.float64) * stride
    return PositionSchedule(SamplerMode.UNIFORM, l_train, t_prime, context_len, positions)


def random_positions(rng: np.random.Generator, l_train: int, t_prime: float, context_len: int) -> PositionSchedule:
    """L_train distinct integers drawn without replacement from ``1..floor(t' * L)``, sorted."""
    _check(l_train, t_prime, context_len)
    upper = math.floor(t_prime * context_len)
    if upper < l_train:
        raise InvalidArgumentError(
            f"index range 1..{upper} holds fewer than L_train = {l_train} positions"
        )
    picks = rng.choice(upper, size=l_train, replace=False) + 1
    positions = np.sort(picks).astype(np.float64)
    return PositionSchedule(SamplerMode.RANDOM, l_train, t_prime, context_len, positions)


def sample_positions(mode: SamplerMode, rng: np.random.Generator, l_train: int, t_prime: float, context_len: int) -> PositionSchedule:
    if mode is SamplerMode.UNIFORM:
        return uniform_positions(l_train, t_prime, context_len)
    return random_positions(rng, l_train, t_prime, context_len)
