"""
Synthetic long documents with planted key-value facts.

Token layout: ``0`` BOS, ``1`` SEP, ``2`` QUERY, ``3`` ANSWER, ``4`` EOS,
``5`` FACT, ``6..9`` instruction templates, ``10..vocab-1`` content. A fact is
the span ``[FACT, k1, k2, v1, v2]`` somewhere in the filler text.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import InvalidArgumentError
from ..utils.validators import GenConfig
from ..utils.workers import WorkerPool

SEP, QUERY, ANSWER, EOS, FACT = 1, 2, 3, 4, 5
TEMPLATE_TOKENS = (6, 7, 8, 9)
CONTENT_START = 10
FACT_LEN = 5


class Fact(BaseModel):
    model_config = ConfigDict(frozen=True)

    key: tuple[int, int]
    value: tuple[int, int]
    start: int = Field(ge=0)

    @property
    def end(self) -> int:
        return self.start + FACT_LEN

    def span_tokens(self) -> list[int]:
        return [FACT, *self.key, *self.value]


class SyntheticDoc(BaseModel):
    model_config = ConfigDict(frozen=True)

    doc_id: int
    tokens: list[int]
    facts: list[Fact]

    @model_validator(mode="after")
    def _check_facts(self):
        for fact in self.facts:
            if fact.end > len(self.tokens) or self.tokens[fact.start:fact.end] != fact.span_tokens():
                raise ValueError(f"fact at {fact.start} is not present in the document")
        return self

    def __len__(self) -> int:
        return len(self.tokens)


class Chunk(BaseModel):
    """A contiguous span ``[start, end)`` of a document and the facts it fully contains."""

    model_config = ConfigDict(frozen=True)

    start: int
    end: int
    facts: list[Fact]


def _check_vocab(vocab_size: int) -> None:
    if vocab_size < CONTENT_START + 4:
        raise InvalidArgumentError(f"vocabulary must hold at least {CONTENT_START + 4} tokens, got {vocab_size}")


def plant_facts(rng: np.random.Generator, length: int, n_facts: int, vocab_size: int, doc_id: int = 0) -> SyntheticDoc:
    """Filler of ``length`` tokens with ``n_facts`` facts at evenly spread, jittered depths."""
    _check_vocab(vocab_size)
    n_facts = min(n_facts, length // FACT_LEN)
    if n_facts < 1:
        raise InvalidArgumentError(f"a document of {length} tokens cannot hold a fact")
    tokens = rng.integers(CONTENT_START, vocab_size, size=length).tolist()
    slot = length // n_facts
    n_content = vocab_size - CONTENT_START
    keys = rng.choice(n_content * n_content, size=n_facts, replace=n_facts > n_content * n_content)
    facts = []
    for i in range(n_facts):
        start = i * slot + int(rng.integers(0, slot - FACT_LEN + 1))
        key = (CONTENT_START + int(keys[i]) // n_content, CONTENT_START + int(keys[i]) % n_content)
        value = tuple(int(v) for v in rng.integers(CONTENT_START, vocab_size, size=2))
        fact = Fact(key=key, value=value, start=start)
        tokens[start:fact.end] = fact.span_tokens()
        facts.append(fact)
    return SyntheticDoc(doc_id=doc_id, tokens=tokens, facts=facts)


def make_docs(
    rng: np.random.Generator,
    n_docs: int,
    cfg: GenConfig,
    vocab_size: int,
    pool: WorkerPool | None = None,
) -> list[SyntheticDoc]:
    """Seeded documents; each gets its own derived generator so the output is order-independent."""
    if n_docs < 0:
        raise InvalidArgumentError(f"n_docs must be non-negative, got {n_docs}")
    _check_vocab(vocab_size)
    seeds = rng.integers(0, 2**63 - 1, size=n_docs)

    def build(i: int) -> SyntheticDoc:
        doc_rng = np.random.default_rng(int(seeds[i]))
        length = int(doc_rng.integers(cfg.min_doc_len, cfg.max_doc_len + 1))
        return plant_facts(doc_rng, length, cfg.facts_per_doc, vocab_size, doc_id=i)

    items = list(range(n_docs))
    docs = pool.map(build, items) if pool is not None else [build(i) for i in items]
    return sorted(docs, key=lambda d: d.doc_id)


def sample_chunks(rng: np.random.Generator, doc: SyntheticDoc, cfg: GenConfig) -> list[Chunk]:
    """Up to ``max_chunks_per_doc`` windows of ``chunk_len_max`` tokens, each around a distinct fact."""
    if len(doc) == 0:
        raise InvalidArgumentError("document is empty")
    if cfg.chunk_len_max >= len(doc) or not doc.facts:
        return [Chunk(start=0, end=len(doc), facts=list(doc.facts))]
    width = cfg.chunk_len_max
    n = min(cfg.max_chunks_per_doc, len(doc.facts))
    chosen = sorted(int(i) for i in rng.choice(len(doc.facts), size=n, replace=False))
    chunks = []
    for i in chosen:
        fact = doc.facts[i]
        lo = max(0, fact.end - width)
        hi = min(fact.start, len(doc) - width)
        start = int(rng.integers(lo, hi + 1))
        end = start + width
        inside = [f for f in doc.facts if f.start >= start and f.end <= end]
        chunks.append(Chunk(start=start, end=end, facts=inside))
    return chunks


def answer_from_chunk(chunk_tokens: Sequence[int], key: Sequence[int]) -> tuple[int, int] | None:
    """The value planted under ``key`` if its whole fact span is in ``chunk_tokens``."""
    k1, k2 = key
    for i in range(len(chunk_tokens) - FACT_LEN + 1):
        if chunk_tokens[i] == FACT and chunk_tokens[i + 1] == k1 and chunk_tokens[i + 2] == k2:
            return int(chunk_tokens[i + 3]), int(chunk_tokens[i + 4])
    return None
