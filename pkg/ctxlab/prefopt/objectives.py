"""
Preference objectives over sequence log-probabilities.

The functions here work on already-computed log-probabilities, given either as
floats or as tape tensors, so the same arithmetic serves exact tabular oracles,
loss reporting and training. DPO and LongPO differ only in which
log-probabilities are passed in, and both go through ``preference_loss``.
"""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np
from scipy.special import expit

from ..autograd import Tensor, as_tensor, stack
from ..errors import InvalidArgumentError
from ..utils.enum import Aggregation

Scalar = Union[float, Tensor]


def _check_beta(beta: float) -> None:
    if not beta > 0.0:
        raise InvalidArgumentError(f"beta must be positive, got {beta}")


def bt_preference(r_w: float, r_l: float) -> float:
    """Bradley-Terry probability that the first response is preferred."""
    return float(expit(r_w - r_l))


def longpo_reward(policy_logp_long: Scalar, shortref_logp_short: Scalar, beta: float) -> Scalar:
    """beta * log(pi(y|x_L) / pi_short(y|x_S)); the partition term is left out."""
    _check_beta(beta)
    return beta * (policy_logp_long - shortref_logp_short)


def preference_margin(beta: float, policy_w: Scalar, ref_w: Scalar, policy_l: Scalar, ref_l: Scalar) -> Scalar:
    return longpo_reward(policy_w, ref_w, beta) - longpo_reward(policy_l, ref_l, beta)


def preference_loss(beta: float, policy_w: Scalar, ref_w: Scalar, policy_l: Scalar, ref_l: Scalar) -> Tensor:
    """-log sigmoid(margin), evaluated as softplus(-margin)."""
    margin = as_tensor(preference_margin(beta, policy_w, ref_w, policy_l, ref_l))
    return (-margin).softplus()


def aggregate_turns(logps: Sequence[Scalar], aggregation: Aggregation) -> Tensor:
    """Combine per-turn log-probabilities.

    ``SUM_LOGPROB`` adds them; ``SUM_PROB`` returns log(sum_i exp(logp_i)),
    the literal sum of probabilities kept in the log domain.
    """
    if not logps:
        raise InvalidArgumentError("at least one turn is required")
    stacked = stack([as_tensor(v) for v in logps])
    if aggregation is Aggregation.SUM_PROB:
        return stacked.logsumexp(axis=0)
    return stacked.sum()


def multiturn_preference_loss(
    beta: float,
    policy_w: Sequence[Scalar],
    ref_w: Sequence[Scalar],
    policy_l: Sequence[Scalar],
    ref_l: Sequence[Scalar],
    aggregation: Aggregation = Aggregation.SUM_LOGPROB,
) -> Tensor:
    if not (len(policy_w) == len(ref_w) == len(policy_l) == len(ref_l)):
        raise InvalidArgumentError("every term needs one log-probability per turn")
    if len(policy_w) == 1:
        return preference_loss(beta, policy_w[0], ref_w[0], policy_l[0], ref_l[0])
    return preference_loss(
        beta,
        aggregate_turns(policy_w, aggregation),
        aggregate_turns(ref_w, aggregation),
        aggregate_turns(policy_l, aggregation),
        aggregate_turns(ref_l, aggregation),
    )


def length_normalized_nll(logp: Scalar, length: int) -> Scalar:
    if length < 1:
        raise InvalidArgumentError("NLL needs a non-empty sequence")
    return -logp * (1.0 / length)


def combine_final(mt_loss: Scalar, nll: Scalar, lambda_w: float) -> Scalar:
    """lambda_w * L_mt + L_nll."""
    if lambda_w < 0.0:
        raise InvalidArgumentError(f"lambda_w must be non-negative, got {lambda_w}")
    return lambda_w * mt_loss + nll


def kl_divergence(p, q) -> float:
    """KL(p || q) over a finite support; q must be positive wherever p is."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise InvalidArgumentError(f"distributions must be vectors of equal length, got {p.shape} and {q.shape}")
    if np.any(p < 0.0) or np.any(q < 0.0):
        raise InvalidArgumentError("probabilities must be non-negative")
    support = p > 0.0
    if np.any(q[support] == 0.0):
        raise InvalidArgumentError("q is zero where p has mass")
    return float(np.sum(p[support] * (np.log(p[support]) - np.log(q[support]))))
