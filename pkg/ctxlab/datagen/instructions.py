"""Templated instruction generation: a pool of candidate queries per chunk, one picked."""
from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..errors import InvalidArgumentError
from ..utils.validators import GenConfig
from .documents import ANSWER, EOS, QUERY, SEP, TEMPLATE_TOKENS, Chunk, Fact

# Fixed preference over phrasing templates; temperature and nucleus act on these.
TEMPLATE_SCORES = np.array([2.0, 1.0, 0.5, 0.0])


class Instruction(BaseModel):
    model_config = ConfigDict(frozen=True)

    tokens: list[int]
    fact: Fact

    @property
    def answer(self) -> list[int]:
        return [*self.fact.value, EOS]


def template_distribution(temperature: float, nucleus_p: float) -> np.ndarray:
    """Softmax of the template scores at ``temperature``, cut to the top-p nucleus."""
    if not 0.0 < temperature <= 2.0 or not 0.0 < nucleus_p <= 1.0:
        raise InvalidArgumentError("temperature must lie in (0, 2] and nucleus p in (0, 1]")
    logits = TEMPLATE_SCORES / temperature
    probs = np.exp(logits - logits.max())
    probs /= probs.sum()
    order = np.argsort(-probs, kind="stable")
    cumulative = np.cumsum(probs[order])
    keep = order[: int(np.searchsorted(cumulative, nucleus_p) + 1)]
    out = np.zeros_like(probs)
    out[keep] = probs[keep]
    return out / out.sum()


def instruction_tokens(template: int, fact: Fact) -> list[int]:
    return [SEP, QUERY, template, *fact.key, ANSWER]


def instruction_pool(rng: np.random.Generator, chunk: Chunk, cfg: GenConfig) -> list[Instruction]:
    if not chunk.facts:
        raise InvalidArgumentError("chunk holds no fact to ask about")
    probs = template_distribution(cfg.instruction_temperature, cfg.nucleus_p)
    pool = []
    for _ in range(cfg.instructions_per_doc):
        fact = chunk.facts[int(rng.integers(len(chunk.facts)))]
        template = TEMPLATE_TOKENS[int(rng.choice(len(TEMPLATE_TOKENS), p=probs))]
        pool.append(Instruction(tokens=instruction_tokens(template, fact), fact=fact))
    return pool


def gen_instruction(rng: np.random.Generator, chunk: Chunk, cfg: GenConfig) -> Instruction:
    """Generate the instruction pool for ``chunk`` and sample one member."""
    pool = instruction_pool(rng, chunk, cfg)
    return pool[int(rng.integers(len(pool)))]
