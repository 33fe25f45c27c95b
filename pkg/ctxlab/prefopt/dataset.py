"""Preference records and their JSONL storage (one multi-turn sample per line)."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import CheckpointError, InvalidArgumentError


class PreferenceQuadruple(BaseModel):
    """(x_S, x_L, y_S, y_L): chosen y_S from the short context, rejected y_L from the long one."""

    model_config = ConfigDict(frozen=True)

    x_s: list[int]
    x_l: list[int]
    y_s: list[int] = Field(min_length=1)
    y_l: list[int] = Field(min_length=1)
    truncated: bool = False

    @model_validator(mode="after")
    def _check_lengths(self):
        if len(self.x_s) > len(self.x_l):
            raise ValueError("the short context must not be longer than the long context")
        return self


class Turn(BaseModel):
    """One chunk-instruction turn; the chunk is ``c_l[span_start:span_end]``."""

    model_config = ConfigDict(frozen=True)

    span_start: int = Field(ge=0)
    span_end: int
    instruction: list[int] = Field(min_length=1)
    chosen: list[int] = Field(min_length=1)
    rejected: list[int] = Field(min_length=1)
    truncated: bool = False

    @model_validator(mode="after")
    def _check_span(self):
        if self.span_end <= self.span_start:
            raise ValueError("chunk span must be non-empty")
        return self


class MultiTurnSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    doc_id: int = 0
    c_l: list[int] = Field(min_length=1)
    turns: list[Turn] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_spans(self):
        for turn in self.turns:
            if turn.span_end > len(self.c_l):
                raise ValueError(f"chunk span [{turn.span_start}, {turn.span_end}) exceeds the document")
        return self

    def chunk(self, i: int) -> list[int]:
        turn = self.turns[i]
        return self.c_l[turn.span_start:turn.span_end]

    def quadruple(self, i: int) -> PreferenceQuadruple:
        turn = self.turns[i]
        return PreferenceQuadruple(
            x_s=self.chunk(i) + turn.instruction,
            x_l=self.c_l + turn.instruction,
            y_s=turn.chosen,
            y_l=turn.rejected,
            truncated=turn.truncated,
        )

    def quadruples(self) -> list[PreferenceQuadruple]:
        return [self.quadruple(i) for i in range(len(self.turns))]

    def chosen_sequence(self) -> list[int]:
        """S_L: the long document followed by every instruction and its chosen answer."""
        seq = list(self.c_l)
        for turn in self.turns:
            seq.extend(turn.instruction)
            seq.extend(turn.chosen)
        return seq


def save_dataset(samples: Iterable[MultiTurnSample], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for sample in samples:
            f.write(json.dumps(sample.model_dump(mode="json"), sort_keys=True) + "\n")
    return path


def load_dataset(path: str | Path) -> list[MultiTurnSample]:
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"dataset not found: {path}")
    samples = []
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                samples.append(MultiTurnSample.model_validate_json(line))
            except ValidationError as e:
                raise CheckpointError(f"{path}:{lineno}: invalid preference record: {e}") from e
    return samples
