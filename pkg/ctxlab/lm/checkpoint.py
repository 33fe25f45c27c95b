"""Versioned JSON checkpoints: model, dynamics, configs and generator state."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from ..errors import CheckpointError
from ..ode import OdeDynamics
from ..utils.serialization import read_json, write_json
from ..utils.validators import ModelConfig, TrainConfig
from .model import TinyLM

CHECKPOINT_FORMAT = "ctxlab.checkpoint"
CHECKPOINT_VERSION = 2


@dataclass
class Checkpoint:
    model: TinyLM
    dynamics: OdeDynamics | None = None
    train_config: TrainConfig | None = None
    rng_state: dict[str, dict[str, Any]] | None = None  # stream name -> bit generator state
    step: int = 0

    @property
    def model_config(self) -> ModelConfig:
        return self.model.cfg

    def to_record(self) -> dict[str, Any]:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "step": self.step,
            "model_config": self.model.cfg.model_dump(mode="json"),
            "train_config": self.train_config.model_dump(mode="json") if self.train_config else None,
            "model": self.model.to_record(),
            "dynamics": self.dynamics.to_record() if self.dynamics is not None else None,
            "rng_state": self.rng_state,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "Checkpoint":
        if record.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError(f"not a checkpoint record (format={record.get('format')!r})")
        if record.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {record.get('version')}")
        try:
            model_cfg = ModelConfig.model_validate(record["model_config"])
            train_cfg = TrainConfig.model_validate(record["train_config"]) if record.get("train_config") else None
            model = TinyLM.from_record(model_cfg, record["model"])
            dynamics = OdeDynamics.from_record(record["dynamics"]) if record.get("dynamics") else None
            return cls(model, dynamics, train_cfg, record.get("rng_state"), int(record.get("step", 0)))
        except KeyError as e:
            raise CheckpointError(f"checkpoint is missing {e}") from e
        except ValidationError as e:
            raise CheckpointError(f"checkpoint holds an invalid config: {e}") from e

    def save(self, path: str | Path) -> Path:
        return write_json(path, self.to_record())

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        return cls.from_record(read_json(path))

    def restore_rng(self, name: str) -> np.random.Generator | None:
        state = (self.rng_state or {}).get(name)
        if state is None:
            return None
        rng = np.random.default_rng()
        rng.bit_generator.state = state
        return rng
