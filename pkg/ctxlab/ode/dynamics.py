"""The trainable frequency dynamics ``g(z, t) = W_down silu(W_up z) + xi_t``."""
from __future__ import annotations

import math
from typing import Any, Mapping

import numpy as np

from ..autograd import Tensor, as_tensor, no_grad, parameter
from ..errors import CheckpointError, InvalidArgumentError
from ..utils.serialization import decode_array, encode_array

PARAM_NAMES = ("w_up", "w_down", "time_w", "time_b")


class OdeDynamics:
    """Up-and-down projection over the log basis plus a scalar time embedding.

    ``w_up`` maps R^{d/2} to R^{amp*d}, ``w_down`` maps back; the time
    embedding is ``xi_t = time_w * log(t) + time_b`` broadcast to every entry.
    """

    def __init__(self, d: int, amp: int, w_up, w_down, time_w: float = 0.0, time_b: float = 0.0):
        if d <= 0 or d % 2:
            raise InvalidArgumentError(f"head dimension must be a positive even integer, got {d}")
        if amp < 1:
            raise InvalidArgumentError(f"amplification factor must be >= 1, got {amp}")
        self.d = d
        self.amp = amp
        half, hidden = d // 2, amp * d
        self.params: dict[str, Tensor] = {
            "w_up": parameter(w_up, "w_up"),
            "w_down": parameter(w_down, "w_down"),
            "time_w": parameter(time_w, "time_w"),
            "time_b": parameter(time_b, "time_b"),
        }
        if self.params["w_up"].shape != (hidden, half):
            raise InvalidArgumentError(f"w_up must have shape {(hidden, half)}, got {self.params['w_up'].shape}")
        if self.params["w_down"].shape != (half, hidden):
            raise InvalidArgumentError(f"w_down must have shape {(half, hidden)}, got {self.params['w_down'].shape}")
        for name, p in self.params.items():
            if not np.all(np.isfinite(p.data)):
                raise InvalidArgumentError(f"parameter {name} has non-finite entries")

    @classmethod
    def initialize(cls, d: int, amp: int, rng: np.random.Generator, std: float = 0.02) -> "OdeDynamics":
        half, hidden = d // 2, amp * d
        return cls(
            d,
            amp,
            rng.normal(0.0, std, size=(hidden, half)),
            rng.normal(0.0, std, size=(half, hidden)),
        )

    @classmethod
    def zeros(cls, d: int, amp: int = 1) -> "OdeDynamics":
        half, hidden = d // 2, amp * d
        return cls(d, amp, np.zeros((hidden, half)), np.zeros((half, hidden)))

    @property
    def w_up(self) -> Tensor:
        return self.params["w_up"]

    @property
    def w_down(self) -> Tensor:
        return self.params["w_down"]

    def field(self, z: Tensor, t: float) -> Tensor:
        if z.shape != (self.d // 2,):
            raise InvalidArgumentError(f"log basis must have length {self.d // 2}, got shape {z.shape}")
        if t < 1.0:
            raise InvalidArgumentError(f"time must be >= 1, got {t}")
        hidden = (z @ self.w_up.T).silu()
        xi = self.params["time_w"] * math.log(t) + self.params["time_b"]
        return hidden @ self.w_down.T + xi

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def to_record(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "amp": self.amp,
            "params": {name: encode_array(self.params[name].data) for name in PARAM_NAMES},
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "OdeDynamics":
        try:
            params = {name: decode_array(record["params"][name]) for name in PARAM_NAMES}
            return cls(
                int(record["d"]),
                int(record["amp"]),
                params["w_up"],
                params["w_down"],
                params["time_w"],
                params["time_b"],
            )
        except KeyError as e:
            raise CheckpointError(f"dynamics record is missing {e}") from e


def dynamics_eval(dyn: OdeDynamics, z, t: float) -> np.ndarray:
    with no_grad():
        return dyn.field(as_tensor(np.asarray(z, dtype=np.float64)), t).data.copy()
