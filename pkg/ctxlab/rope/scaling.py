"""
The unified frequency-basis view of position-embedding scaling.

Every scaling method projects the basis element-wise, ``y(t) = alpha(t) * theta``.
In the log domain ``z(t) = log y(t)`` the discrete methods form a chain
``z(t) = z(t-1) + log(alpha(t) / alpha(t-1))`` anchored at ``alpha(1) = 1``.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import InvalidArgumentError
from ..utils.enum import ScalingKind
from .core import FrequencyBasis, apply_rope


class AlphaSchedule(BaseModel):
    """alpha(t) for PI or YaRN.

    ``normalize_at_one`` divides YaRN's alpha(t) by alpha(1) so the chain is
    anchored at one. ``zero_based_index`` switches the YaRN exponent from the
    literal ``i = 1..d/2`` to ``i = 0..d/2-1``.
    """

    model_config = ConfigDict(frozen=True)

    kind: ScalingKind = ScalingKind.PI
    s: float = Field(default=1.0, gt=0.0)
    normalize_at_one: bool = True
    zero_based_index: bool = False


def _check_t(t: float) -> float:
    t = float(t)
    if not np.isfinite(t) or t < 1.0:
        raise InvalidArgumentError(f"scaling factor must be finite and >= 1, got {t}")
    return t


def _yarn_exponents(schedule: AlphaSchedule, d: int) -> np.ndarray:
    i = np.arange(d // 2) if schedule.zero_based_index else np.arange(1, d // 2 + 1)
    return -2.0 * i / (d - 2)


def alpha(schedule: AlphaSchedule, t: float, d: int) -> np.ndarray:
    t = _check_t(t)
    if d <= 0 or d % 2:
        raise InvalidArgumentError(f"head dimension must be a positive even integer, got {d}")
    if schedule.kind is ScalingKind.PI:
        return np.full(d // 2, 1.0 / t)

    if d < 4:
        raise InvalidArgumentError("YaRN alpha(t) needs d >= 4 (the exponent divides by d - 2)")
    exponents = _yarn_exponents(schedule, d)
    values = np.power(schedule.s * t, exponents)
    if schedule.normalize_at_one:
        values = values / np.power(schedule.s, exponents)
    return values


def _check_alpha(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if np.any(~np.isfinite(values)) or np.any(values <= 0.0):
        raise InvalidArgumentError("alpha entries must be finite and strictly positive")
    return values


def scale_basis(basis: FrequencyBasis, alpha_values) -> FrequencyBasis:
    alpha_values = _check_alpha(alpha_values)
    if alpha_values.shape != basis.values.shape:
        raise InvalidArgumentError(
            f"alpha has shape {alpha_values.shape}, basis has {basis.values.shape}"
        )
    return FrequencyBasis(alpha_values * basis.values)


def fixed_basis(schedule: AlphaSchedule, base: FrequencyBasis, t: float) -> FrequencyBasis:
    """Basis a fixed discrete method would use at scaling factor ``t``."""
    return scale_basis(base, alpha(schedule, t, base.dims))


def log_basis(basis: FrequencyBasis) -> np.ndarray:
    return np.log(basis.values)


def chain_step(z_prev, alpha_prev, alpha_cur) -> np.ndarray:
    z_prev = np.asarray(z_prev, dtype=np.float64)
    alpha_prev = _check_alpha(alpha_prev)
    alpha_cur = _check_alpha(alpha_cur)
    if not (z_prev.shape == alpha_prev.shape == alpha_cur.shape):
        raise InvalidArgumentError("log basis and alpha vectors must have matching lengths")
    return z_prev + np.log(alpha_cur) - np.log(alpha_prev)


def chain_fold(schedule: AlphaSchedule, z1, t_values: Iterable[float], d: int) -> np.ndarray:
    """Fold chain_step from t=1 through ``t_values`` (ascending)."""
    z = np.asarray(z1, dtype=np.float64)
    prev = alpha(schedule, 1.0, d)
    for t in t_values:
        cur = alpha(schedule, t, d)
        z = chain_step(z, prev, cur)
        prev = cur
    return z


def position_basis_deviation(x, m: float, T: float, basis: FrequencyBasis) -> float:
    """max |f(x, T*m, theta) - f(x, m, T*theta)|: position scaling equals basis scaling."""
    if T <= 0.0:
        raise InvalidArgumentError(f"T must be positive, got {T}")
    scaled_positions = apply_rope(x, T * m, basis)
    scaled_basis = apply_rope(x, m, FrequencyBasis(T * basis.values))
    return float(np.max(np.abs(scaled_positions - scaled_basis)))
