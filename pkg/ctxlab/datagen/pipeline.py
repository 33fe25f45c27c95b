"""The short-to-long preference pipeline and its self-evolving iterations."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import InvalidArgumentError
from ..lm import TinyLM
from ..prefopt import MultiTurnSample, PreferenceQuadruple, Turn
from ..utils.validators import GenConfig
from ..utils.workers import WorkerPool
from .documents import EOS, TEMPLATE_TOKENS, SyntheticDoc, make_docs, plant_facts, sample_chunks
from .instructions import gen_instruction, instruction_tokens
from .responses import BasisFn, answer_accuracy, gen_quadruple, has_repeated_ngram

logger = logging.getLogger(__name__)

QA_TAIL = 9


def fact_sequences(rng: np.random.Generator, n: int, length: int, vocab_size: int, facts_per_seq: int = 2) -> list[list[int]]:
    """QA sequences of exactly ``length`` tokens: a short document, one query and its answer.

    Used to pretrain the short-context model that later writes the responses.
    """
    if length < QA_TAIL + 5:
        raise InvalidArgumentError(f"QA sequences need at least {QA_TAIL + 5} tokens, got {length}")
    seqs = []
    for _ in range(n):
        doc = plant_facts(rng, length - QA_TAIL, facts_per_seq, vocab_size)
        fact = doc.facts[int(rng.integers(len(doc.facts)))]
        template = TEMPLATE_TOKENS[int(rng.integers(len(TEMPLATE_TOKENS)))]
        tokens = doc.tokens + instruction_tokens(template, fact)
        tokens += [*fact.value, EOS]
        seqs.append(tokens)
    return seqs


def assemble_multiturn(
    doc: SyntheticDoc,
    quads: Sequence[PreferenceQuadruple],
    spans: Sequence[tuple[int, int]] | None = None,
) -> MultiTurnSample:
    """Group the quadruples of one document into an ordered multi-turn sample.

    Without ``spans`` each chunk is located by its first occurrence in the document.
    """
    if not quads:
        raise InvalidArgumentError("at least one quadruple is required")
    if spans is not None and len(spans) != len(quads):
        raise InvalidArgumentError("need one span per quadruple")
    n_doc = len(doc.tokens)
    turns = []
    for i, quad in enumerate(quads):
        if quad.x_l[:n_doc] != doc.tokens:
            raise InvalidArgumentError(f"quadruple {i} belongs to a different document")
        instruction = quad.x_l[n_doc:]
        chunk = quad.x_s[: len(quad.x_s) - len(instruction)]
        if spans is not None:
            start, end = spans[i]
        else:
            start = _find(doc.tokens, chunk)
            end = start + len(chunk)
        if doc.tokens[start:end] != chunk or quad.x_s[len(chunk):] != instruction:
            raise InvalidArgumentError(f"quadruple {i}: short context is not a chunk of the document plus the instruction")
        turns.append(Turn(span_start=start, span_end=end, instruction=instruction,
                          chosen=quad.y_s, rejected=quad.y_l, truncated=quad.truncated))
    return MultiTurnSample(doc_id=doc.doc_id, c_l=doc.tokens, turns=turns)


def _find(haystack: list[int], needle: list[int]) -> int:
    for i in range(len(haystack) - len(needle) + 1):
        if haystack[i:i + len(needle)] == needle:
            return i
    raise InvalidArgumentError("chunk does not occur in the document")


def next_iteration_handoff(cfg: GenConfig, checkpoint: str | None, factor: float = 2.0) -> GenConfig:
    """Generation config for the next self-evolving iteration: longer documents, newest model."""
    if factor <= 1.0:
        raise InvalidArgumentError(f"length factor must exceed 1, got {factor}")
    return cfg.model_copy(update={
        "min_doc_len": int(round(cfg.min_doc_len * factor)),
        "max_doc_len": int(round(cfg.max_doc_len * factor)),
        "model_checkpoint": checkpoint,
    })


@dataclass
class DatasetReport:
    samples: list[MultiTurnSample] = field(default_factory=list)
    turns_kept: int = 0
    turns_filtered: int = 0
    turns_tied: int = 0
    truncated: int = 0
    chosen_accuracy: float = 0.0
    rejected_accuracy: float = 0.0

    @property
    def max_doc_len(self) -> int:
        return max((len(s.c_l) for s in self.samples), default=0)

    def summary(self) -> dict:
        return {
            "samples": len(self.samples),
            "turns_kept": self.turns_kept,
            "turns_filtered": self.turns_filtered,
            "turns_tied": self.turns_tied,
            "truncated": self.truncated,
            "chosen_accuracy": self.chosen_accuracy,
            "rejected_accuracy": self.rejected_accuracy,
            "max_doc_len": self.max_doc_len,
        }


def build_preference_dataset(
    model: TinyLM,
    basis_fn: BasisFn,
    cfg: GenConfig,
    rng: np.random.Generator,
    n_docs: int,
    pool: WorkerPool | None = None,
) -> DatasetReport:
    """Documents, chunks, instructions, greedy responses, repetition filter, multi-turn grouping.

    Every document gets a derived generator, so the result depends only on
    ``rng``'s state and ``cfg``, not on how work is spread over threads.
    """
    docs = make_docs(rng, n_docs, cfg, model.cfg.vocab_size, pool)
    doc_seeds = rng.integers(0, 2**63 - 1, size=len(docs))

    def process(i: int):
        doc_rng = np.random.default_rng(int(doc_seeds[i]))
        doc = docs[i]
        quads, spans, stats = [], [], []
        for chunk in sample_chunks(doc_rng, doc, cfg):
            instruction = gen_instruction(doc_rng, chunk, cfg)
            quad = gen_quadruple(model, basis_fn, doc, chunk, instruction, cfg)
            repetitive = any(
                has_repeated_ngram(y, cfg.ngram_n, cfg.ngram_max_count) for y in (quad.y_s, quad.y_l)
            )
            tied = not repetitive and cfg.drop_ties and quad.y_s == quad.y_l
            stats.append((answer_accuracy(quad.y_s, instruction), answer_accuracy(quad.y_l, instruction),
                          quad.truncated, repetitive, tied))
            if not (repetitive or tied):
                quads.append(quad)
                spans.append((chunk.start, chunk.end))
        sample = assemble_multiturn(doc, quads, spans) if quads else None
        return sample, stats

    results = pool.map(process, range(len(docs))) if pool is not None else [process(i) for i in range(len(docs))]

    report = DatasetReport()
    all_stats = []
    for sample, stats in results:
        if sample is not None:
            report.samples.append(sample)
        all_stats.extend(stats)
    if all_stats:
        report.chosen_accuracy = float(np.mean([s[0] for s in all_stats]))
        report.rejected_accuracy = float(np.mean([s[1] for s in all_stats]))
    report.truncated = sum(1 for s in all_stats if s[2])
    report.turns_filtered = sum(1 for s in all_stats if s[3])
    report.turns_tied = sum(1 for s in all_stats if s[4])
    report.turns_kept = len(all_stats) - report.turns_filtered - report.turns_tied
    logger.info("built %d preference samples (%d turns kept, %d filtered, %d tied)",
                len(report.samples), report.turns_kept, report.turns_filtered, report.turns_tied)
    return report


ModelSource = Callable[[int, GenConfig], tuple[TinyLM, BasisFn]]
Advance = Callable[[int, DatasetReport], str]


def self_evolve(
    model_source: ModelSource,
    cfg: GenConfig,
    rng: np.random.Generator,
    n_docs: int,
    iterations: int,
    factor: float = 2.0,
    advance: Advance | None = None,
    pool: WorkerPool | None = None,
) -> list[DatasetReport]:
    """Chain dataset generation over growing document lengths.

    ``model_source(i, cfg)`` loads the model named by ``cfg.model_checkpoint``
    (and its basis resolver) to write the data of iteration ``i``.
    ``advance(i, report)`` trains on that data and returns the checkpoint the
    next iteration loads. Without ``advance`` every iteration keeps the
    starting checkpoint.
    """
    reports = []
    for i in range(iterations):
        model, basis_fn = model_source(i, cfg)
        report = build_preference_dataset(model, basis_fn, cfg, rng, n_docs, pool)
        reports.append(report)
        if i + 1 < iterations:
            checkpoint = advance(i, report) if advance is not None else cfg.model_checkpoint
            cfg = next_iteration_handoff(cfg, checkpoint, factor)
    return reports
