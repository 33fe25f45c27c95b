"""Self-describing JSON records for parameter tensors.

Floats are written with ``repr`` precision (the json module's default), so a
load followed by a save reproduces the file byte for byte.
"""
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..errors import CheckpointError


def encode_array(values: np.ndarray) -> dict[str, Any]:
    values = np.asarray(values, dtype=np.float64)
    return {"shape": list(values.shape), "values": [float(v) for v in values.reshape(-1)]}


def decode_array(record: Mapping[str, Any]) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in record["shape"])
        values = np.asarray(record["values"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"malformed array record: {e}") from e
    if values.size != int(np.prod(shape)):
        raise CheckpointError(f"array record holds {values.size} values for shape {shape}")
    return values.reshape(shape)


def dumps_canonical(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def write_json(path: str | Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_canonical(payload), encoding="utf-8")
    return path


def read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path} is not valid JSON: {e}") from e
