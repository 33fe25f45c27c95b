"""Inference-time basis cache: K bases precomputed at grid points t_k."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import CheckpointError, InvalidArgumentError, OutOfRangeError
from ..rope import AlphaSchedule, FrequencyBasis, fixed_basis
from ..utils.serialization import read_json, write_json
from ..utils.validators import IntegratorConfig
from .dynamics import OdeDynamics
from .integrator import basis_at

logger = logging.getLogger(__name__)

CACHE_FORMAT = "ctxlab.basis_cache"
CACHE_VERSION = 1


@dataclass(frozen=True)
class BasisCache:
    entries: tuple[tuple[float, FrequencyBasis], ...]
    context_len: int

    def __post_init__(self):
        entries = tuple((float(t), b) for t, b in self.entries)
        if not entries:
            raise InvalidArgumentError("a basis cache needs at least one entry")
        if self.context_len < 1:
            raise InvalidArgumentError(f"context length must be positive, got {self.context_len}")
        ts = [t for t, _ in entries]
        if ts[0] < 1.0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidArgumentError(f"cache grid must be strictly increasing and start at >= 1, got {ts}")
        dims = {b.dims for _, b in entries}
        if len(dims) != 1:
            raise InvalidArgumentError(f"cached bases disagree on head dimension: {sorted(dims)}")
        object.__setattr__(self, "entries", entries)

    @property
    def t_values(self) -> list[float]:
        return [t for t, _ in self.entries]

    @property
    def max_length(self) -> float:
        return self.entries[-1][0] * self.context_len

    def __len__(self) -> int:
        return len(self.entries)


def _check_grid(t_values: Iterable[float]) -> list[float]:
    t_values = [float(t) for t in t_values]
    if any(b <= a for a, b in zip(t_values, t_values[1:])):
        raise InvalidArgumentError(f"t values must be sorted ascending without repeats, got {t_values}")
    return t_values


def default_cache_grid(t_max: float) -> list[float]:
    """Powers of two up to ``t_max``, with ``t_max`` itself appended."""
    if not math.isfinite(t_max) or t_max < 1.0:
        raise InvalidArgumentError(f"t_max must be finite and >= 1, got {t_max}")
    grid = []
    t = 1.0
    while t <= t_max:
        grid.append(t)
        t *= 2.0
    if grid[-1] != t_max:
        grid.append(float(t_max))
    return grid


def build_cache(
    dyn: OdeDynamics,
    base: FrequencyBasis,
    t_values: Sequence[float],
    cfg: IntegratorConfig,
    context_len: int,
) -> BasisCache:
    t_values = _check_grid(t_values)
    entries = tuple((t, basis_at(dyn, base, t, cfg)) for t in t_values)
    logger.info("built basis cache for t=%s (L=%d)", t_values, context_len)
    return BasisCache(entries, context_len)


def build_schedule_cache(
    base: FrequencyBasis,
    t_values: Sequence[float],
    context_len: int,
    schedule: AlphaSchedule | None = None,
) -> BasisCache:
    """Cache for a fixed-scaling baseline; ``schedule=None`` keeps the unscaled basis."""
    t_values = _check_grid(t_values)
    entries = tuple(
        (t, base if schedule is None else fixed_basis(schedule, base, t)) for t in t_values
    )
    return BasisCache(entries, context_len)


def lookup_entry(cache: BasisCache, l_infer: int) -> tuple[float, FrequencyBasis]:
    """The smallest t_k with ``t_k * L >= l_infer`` and its stored basis."""
    if l_infer < 1:
        raise InvalidArgumentError(f"inference length must be >= 1, got {l_infer}")
    for t, basis in cache.entries:
        if t * cache.context_len >= l_infer:
            return t, basis
    raise OutOfRangeError(l_infer, cache.max_length)


def lookup(cache: BasisCache, l_infer: int) -> FrequencyBasis:
    return lookup_entry(cache, l_infer)[1]


def cache_to_record(cache: BasisCache) -> dict:
    return {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "context_len": cache.context_len,
        "entries": [{"t": t, "basis": basis.to_list()} for t, basis in cache.entries],
    }


def cache_from_record(record: dict) -> BasisCache:
    if record.get("format") != CACHE_FORMAT:
        raise CheckpointError(f"not a basis cache record (format={record.get('format')!r})")
    if record.get("version") != CACHE_VERSION:
        raise CheckpointError(f"unsupported basis cache version {record.get('version')}")
    try:
        entries = tuple(
            (float(e["t"]), FrequencyBasis.from_list(e["basis"])) for e in record["entries"]
        )
        return BasisCache(entries, int(record["context_len"]))
    except (KeyError, TypeError) as e:
        raise CheckpointError(f"malformed basis cache record: {e}") from e


def save_cache(cache: BasisCache, path: str | Path) -> Path:
    return write_json(path, cache_to_record(cache))


def load_cache(path: str | Path) -> BasisCache:
    return cache_from_record(read_json(path))
