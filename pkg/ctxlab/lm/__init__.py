from .model import BOS, TinyLM, greedy_decode
from .corpus import copy_corpus, load_token_file, sample_batch, uniform_corpus
from .trainer import (
    LMTrainer,
    basis_resolver,
    evaluate_ppl,
    make_eval_cache,
    scaling_schedule,
    sequence_nll,
)
from .checkpoint import Checkpoint

__all__ = [
    "BOS",
    "TinyLM",
    "greedy_decode",
    "copy_corpus",
    "load_token_file",
    "sample_batch",
    "uniform_corpus",
    "LMTrainer",
    "basis_resolver",
    "evaluate_ppl",
    "make_eval_cache",
    "scaling_schedule",
    "sequence_nll",
    "Checkpoint",
]
