"""LongPO / DPO / SFT fine-tuning of a language-model policy on multi-turn preference samples."""
from __future__ import annotations

import logging
import math
from typing import Callable, Sequence

import numpy as np

from ..autograd import Adam, Tensor, clip_grad_norm, cosine_lr, no_grad
from ..errors import InvalidArgumentError, TrainingDivergedError
from ..utils.enum import Objective
from ..utils.validators import LongPOConfig
from .dataset import MultiTurnSample
from .objectives import aggregate_turns, combine_final, longpo_reward, multiturn_preference_loss
from .policies import LMPolicy, nll_tensor, stl_constraint_estimate, turn_logprobs

logger = logging.getLogger(__name__)


def reference_logprobs(
    ref: LMPolicy, samples: Sequence[MultiTurnSample], objective: Objective
) -> list[tuple[list[float], list[float]]]:
    """Frozen reference terms per sample: x_S for LongPO, x_L for the DPO baseline."""
    long_context = objective is Objective.DPO
    out = []
    with no_grad():
        for sample in samples:
            chosen, rejected = turn_logprobs(ref, sample, long_context=long_context)
            out.append(([c.item() for c in chosen], [r.item() for r in rejected]))
    return out


def implicit_rewards(pol_w: Sequence[float], pol_l: Sequence[float], ref_w: Sequence[float], ref_l: Sequence[float],
                     cfg: LongPOConfig) -> tuple[float, float]:
    """Turn-aggregated implicit rewards of the chosen and the rejected responses."""
    def reward(pol, ref):
        return longpo_reward(aggregate_turns(pol, cfg.aggregation).item(),
                             aggregate_turns(ref, cfg.aggregation).item(), cfg.beta)

    return reward(pol_w, ref_w), reward(pol_l, ref_l)


def mean_reward_margin(
    policy: LMPolicy,
    samples: Sequence[MultiTurnSample],
    refs: Sequence[tuple[list[float], list[float]]],
    cfg: LongPOConfig,
) -> float:
    """Chosen-minus-rejected implicit reward averaged over the whole dataset."""
    margins = []
    with no_grad():
        for sample, (ref_w, ref_l) in zip(samples, refs):
            pol_w, pol_l = turn_logprobs(policy, sample, long_context=True)
            chosen, rejected = implicit_rewards([p.item() for p in pol_w], [p.item() for p in pol_l], ref_w, ref_l, cfg)
            margins.append(chosen - rejected)
    return float(np.mean(margins)) if margins else 0.0


def train_longpo(
    policy: LMPolicy,
    short_ref: LMPolicy,
    samples: Sequence[MultiTurnSample],
    cfg: LongPOConfig,
    rng: np.random.Generator,
    seed: int = 0,
    on_record: Callable[[dict], None] | None = None,
) -> list[dict]:
    """Optimise ``policy`` in place; returns one metrics record per step.

    The loss is ``lambda_w * L_mt + L_nll`` for ``longpo`` and ``dpo`` and the
    NLL alone for ``sft``. Rewards in the records are the implicit rewards
    ``beta * log(pi(y|x_L) / pi_ref(y|x_ref))`` summed over turns.
    """
    if not samples:
        raise InvalidArgumentError("no preference samples to train on")
    refs = reference_logprobs(short_ref, samples, cfg.objective)
    params = policy.model.params
    optimizer = Adam(params, lr=cfg.lr)
    records = []

    for step in range(cfg.steps):
        idx = rng.choice(len(samples), size=min(cfg.batch_size, len(samples)), replace=False)
        lr = cosine_lr(cfg.lr, step, cfg.steps)
        optimizer.zero_grad()

        total: Tensor | None = None
        pref_total = nll_total = chosen_r = rejected_r = kl_est = 0.0
        for i in sorted(int(j) for j in idx):
            sample = samples[i]
            ref_w, ref_l = refs[i]
            pol_w, pol_l = turn_logprobs(policy, sample, long_context=True)
            nll = nll_tensor(policy, sample.chosen_sequence())
            pref = multiturn_preference_loss(cfg.beta, pol_w, ref_w, pol_l, ref_l, cfg.aggregation)
            loss = nll if cfg.objective is Objective.SFT else combine_final(pref, nll, cfg.lambda_w)
            total = loss if total is None else total + loss

            pref_total += pref.item()
            nll_total += nll.item()
            chosen, rejected = implicit_rewards([p.item() for p in pol_w], [p.item() for p in pol_l], ref_w, ref_l, cfg)
            chosen_r += chosen
            rejected_r += rejected
            kl_est += stl_constraint_estimate(
                [p.item() for p in pol_w + pol_l], list(ref_w) + list(ref_l), cfg.beta
            )

        n = len(idx)
        total = total * (1.0 / n)
        record = {
            "step": step,
            "loss": total.item(),
            "preference_loss": pref_total / n,
            "nll": nll_total / n,
            "chosen_reward": chosen_r / n,
            "rejected_reward": rejected_r / n,
            "reward_margin": (chosen_r - rejected_r) / n,
            "stl_kl_estimate": kl_est / n,
            "lr": lr,
            "seed": seed,
        }
        if not math.isfinite(record["loss"]):
            raise TrainingDivergedError(record)
        total.backward()
        record["grad_norm"] = clip_grad_norm(params, cfg.grad_clip)
        optimizer.step(lr)
        records.append(record)
        if on_record is not None:
            on_record(record)
        if step % 50 == 0:
            logger.info("longpo step %d loss %.4f margin %.4f", step, record["loss"], record["reward_margin"])
    return records
