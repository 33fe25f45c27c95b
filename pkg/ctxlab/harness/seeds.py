"""Named random sub-streams derived from one root seed."""
from __future__ import annotations

import zlib

import numpy as np


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


class SeedStreams:
    """``streams["positions"]`` is a generator seeded by (root seed, CRC32 of the name).

    The same name always maps to the same generator object within a run, and to
    the same sequence across runs.
    """

    def __init__(self, root_seed: int):
        if root_seed < 0:
            raise ValueError(f"seed must be non-negative, got {root_seed}")
        self.root_seed = int(root_seed)
        self._streams: dict[str, np.random.Generator] = {}

    def fresh(self, name: str) -> np.random.Generator:
        return np.random.default_rng([self.root_seed, stream_key(name)])

    def __getitem__(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = self.fresh(name)
        return self._streams[name]

    def state(self) -> dict[str, dict]:
        return {name: rng.bit_generator.state for name, rng in sorted(self._streams.items())}

    def load_state(self, states: dict[str, dict]) -> None:
        """Resume streams from ``state()`` output; named streams continue where they stopped."""
        for name, state in states.items():
            rng = self.fresh(name)
            rng.bit_generator.state = state
            self._streams[name] = rng
