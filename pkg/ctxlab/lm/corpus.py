"""Token corpora for language-model training and perplexity evaluation."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import InvalidArgumentError
from .model import BOS


def copy_corpus(rng: np.random.Generator, n_seqs: int, length: int, vocab_size: int, block_len: int = 0) -> list[list[int]]:
    """Sequences made of one random block repeated until ``length`` tokens.

    Every token after the first block is predictable from ``block_len`` tokens
    back. ``block_len=0`` uses half the sequence, so the copy distance grows
    with the length: a random first half followed by its copy.
    """
    if block_len == 0:
        block_len = max(1, length // 2)
    if block_len < 1 or length < 1 or vocab_size < 3:
        raise InvalidArgumentError("copy corpus needs positive lengths and a vocabulary of at least 3")
    reps = -(-length // block_len)
    corpus = []
    for _ in range(n_seqs):
        block = rng.integers(BOS + 1, vocab_size, size=block_len)
        corpus.append(np.tile(block, reps)[:length].tolist())
    return corpus


def uniform_corpus(rng: np.random.Generator, n_seqs: int, length: int, vocab_size: int) -> list[list[int]]:
    return rng.integers(0, vocab_size, size=(n_seqs, length)).tolist()


def load_token_file(path: str | Path, vocab_size: int | None = None) -> list[list[int]]:
    """One sequence per line, integers separated by whitespace; blank lines skipped."""
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"corpus file not found: {path}")
    corpus = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            seq = [int(tok) for tok in line.split()]
        except ValueError as e:
            raise InvalidArgumentError(f"{path}:{lineno}: {e}") from e
        if vocab_size is not None and any(t < 0 or t >= vocab_size for t in seq):
            raise InvalidArgumentError(f"{path}:{lineno}: token outside [0, {vocab_size})")
        corpus.append(seq)
    return corpus


def sample_batch(rng: np.random.Generator, corpus: Sequence[Sequence[int]], batch_size: int, length: int) -> np.ndarray:
    """``batch_size`` random windows of ``length`` tokens, shape (B, length)."""
    eligible = [seq for seq in corpus if len(seq) >= length]
    if not eligible:
        raise InvalidArgumentError(f"no corpus sequence holds {length} tokens")
    batch = np.empty((batch_size, length), dtype=np.int64)
    for b in range(batch_size):
        seq = eligible[int(rng.integers(len(eligible)))]
        start = int(rng.integers(len(seq) - length + 1))
        batch[b] = seq[start:start + length]
    return batch
