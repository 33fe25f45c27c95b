"""JSONL metrics, one object per line."""
from __future__ import annotations

import json
import threading
import time
from pathlib import Path
from typing import Any

from .. import __version__


class MetricsWriter:
    """Writes metric records under a lock and flushes each line.

    In canonical mode the wall-clock field is left out, so two runs with the
    same config and seed produce byte-identical files. A writer opened with a
    ``command`` tags every record with it and first drops the lines an earlier
    run of that command left in the file; other commands' lines are kept.
    """

    def __init__(self, path: str | Path, canonical: bool = False, tag: str = __version__,
                 command: str | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.canonical = canonical
        self.tag = tag
        self.command = command
        self._lock = threading.Lock()
        self._start = time.perf_counter()
        if command is not None and self.path.exists():
            kept = [line for line in self.path.read_text(encoding="utf-8").splitlines(keepends=True)
                    if line.strip() and json.loads(line).get("command") != command]
            self.path.write_text("".join(kept), encoding="utf-8")
        self._file = self.path.open("a", encoding="utf-8")
        self.count = 0

    def write(self, record: dict[str, Any]) -> None:
        row = dict(record)
        row["version"] = self.tag
        if self.command is not None:
            row["command"] = self.command
        if not self.canonical:
            row["wall_ms"] = round((time.perf_counter() - self._start) * 1000.0, 3)
        line = json.dumps(row, sort_keys=True) + "\n"
        with self._lock:
            self._file.write(line)
            self._file.flush()
            self.count += 1

    def close(self) -> None:
        with self._lock:
            if not self._file.closed:
                self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path: str | Path, command: str | None = None) -> list[dict[str, Any]]:
    with Path(path).open(encoding="utf-8") as f:
        records = [json.loads(line) for line in f if line.strip()]
    if command is not None:
        records = [r for r in records if r.get("command") == command]
    return records
