"""
Rotary position embeddings over real-valued positions.

Feature pairs are adjacent, ``(x[2i], x[2i+1])``, and rotated by ``m * theta[i]``.
The basis index is 0-based, so ``theta[0] == 1`` for the standard basis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidArgumentError


@dataclass(frozen=True)
class FrequencyBasis:
    """Per-pair rotation frequencies for a head of dimension ``dims``."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise InvalidArgumentError("frequency basis must be a non-empty vector")
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise InvalidArgumentError("frequency basis entries must be finite and strictly positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dims(self) -> int:
        return 2 * self.values.size

    def __len__(self) -> int:
        return self.values.size

    def to_list(self) -> list[float]:
        return [float(v) for v in self.values]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "FrequencyBasis":
        return cls(np.asarray(values, dtype=np.float64))


def _check_position(m: float) -> float:
    m = float(m)
    if not np.isfinite(m) or m < 0.0:
        raise InvalidArgumentError(f"position must be finite and non-negative, got {m}")
    return m


def make_basis(d: int, base: float = 1e7) -> FrequencyBasis:
    """Standard RoPE basis ``theta_i = base ** (-2i/d)`` for ``i = 0..d/2-1``."""
    if d <= 0 or d % 2:
        raise InvalidArgumentError(f"head dimension must be a positive even integer, got {d}")
    if base <= 1.0:
        raise InvalidArgumentError(f"base must exceed 1, got {base}")
    exponents = -2.0 * np.arange(d // 2) / d
    return FrequencyBasis(np.power(float(base), exponents))


def apply_rope(x, m: float, basis: FrequencyBasis) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (basis.dims,):
        raise InvalidArgumentError(f"expected a vector of length {basis.dims}, got shape {x.shape}")
    m = _check_position(m)
    if m == 0.0:
        return x.copy()
    angles = m * basis.values
    cos, sin = np.cos(angles), np.sin(angles)
    even, odd = x[0::2], x[1::2]
    out = np.empty_like(x)
    out[0::2] = even * cos - odd * sin
    out[1::2] = even * sin + odd * cos
    return out


def rotate_batch(x, positions, basis: FrequencyBasis) -> np.ndarray:
    """Rotate each row ``x[j]`` by its own position ``positions[j]``."""
    x = np.asarray(x, dtype=np.float64)
    positions = np.asarray(positions, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != basis.dims or positions.shape != (x.shape[0],):
        raise InvalidArgumentError("rotate_batch expects x of shape (T, d) and T positions")
    angles = positions[:, None] * basis.values[None, :]
    cos, sin = np.cos(angles), np.sin(angles)
    out = np.empty_like(x)
    out[:, 0::2] = x[:, 0::2] * cos - x[:, 1::2] * sin
    out[:, 1::2] = x[:, 0::2] * sin + x[:, 1::2] * cos
    return out


def rope_score(q, k, m_q: float, m_k: float, basis: FrequencyBasis) -> float:
    """Inner product of the rotated query and key."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.shape != k.shape:
        raise InvalidArgumentError(f"query shape {q.shape} does not match key shape {k.shape}")
    return float(np.dot(apply_rope(q, m_q, basis), apply_rope(k, m_k, basis)))
