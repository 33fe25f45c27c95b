"""Chosen/rejected responses by greedy decoding, and the repetition filter."""
from __future__ import annotations

from collections import Counter
from typing import Callable, Sequence

from ..errors import InvalidArgumentError
from ..lm import TinyLM, greedy_decode
from ..prefopt import PreferenceQuadruple
from ..rope import FrequencyBasis
from ..utils.validators import GenConfig
from .documents import EOS, Chunk, SyntheticDoc
from .instructions import Instruction

BasisFn = Callable[[int], FrequencyBasis]


def gen_quadruple(
    model_short: TinyLM,
    basis_fn: BasisFn,
    doc: SyntheticDoc,
    chunk: Chunk,
    instruction: Instruction,
    cfg: GenConfig,
) -> PreferenceQuadruple:
    """x_S = [C_S; I], x_L = [C_L; I]; y_S and y_L greedy-decoded by the same short-context model."""
    if chunk.end > len(doc) or chunk.start < 0:
        raise InvalidArgumentError("chunk lies outside the document")
    x_s = doc.tokens[chunk.start:chunk.end] + instruction.tokens
    x_l = doc.tokens + instruction.tokens
    y_s, cut_s = greedy_decode(model_short, x_s, basis_fn, cfg.max_decode_len, eos=EOS)
    y_l, cut_l = greedy_decode(model_short, x_l, basis_fn, cfg.max_decode_len, eos=EOS)
    return PreferenceQuadruple(x_s=x_s, x_l=x_l, y_s=y_s, y_l=y_l, truncated=cut_s or cut_l)


def has_repeated_ngram(tokens: Sequence[int], n: int, max_count: int) -> bool:
    """True if some n-gram occurs more than ``max_count`` times."""
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    if len(tokens) < n:
        return False
    counts = Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return max(counts.values()) > max_count


def answer_accuracy(response: Sequence[int], instruction: Instruction) -> float:
    """Fraction of the planted value tokens reproduced in place."""
    expected = instruction.fact.value
    hits = sum(1 for i, tok in enumerate(expected) if i < len(response) and response[i] == tok)
    return hits / len(expected)
