"""Sequence policies and the policy-level preference losses."""
from __future__ import annotations

from typing import Callable, Protocol, Sequence

import numpy as np

from ..autograd import Tensor, no_grad
from ..errors import InvalidArgumentError
from ..lm import BOS, TinyLM
from ..ode import BasisCache, lookup
from ..rope import FrequencyBasis
from ..utils.enum import Aggregation
from .dataset import MultiTurnSample, PreferenceQuadruple
from .objectives import (
    combine_final,
    length_normalized_nll,
    multiturn_preference_loss,
    preference_loss,
)


class SequencePolicy(Protocol):
    def logprob(self, context: Sequence[int], response: Sequence[int]) -> Tensor:
        """Summed log pi(response | context) as a (possibly differentiable) scalar."""
        ...


class LMPolicy:
    """A ``TinyLM`` read as a policy; ``basis_fn(n)`` picks the basis for ``n`` input tokens."""

    def __init__(self, model: TinyLM, basis_fn: Callable[[int], FrequencyBasis]):
        self.model = model
        self.basis_fn = basis_fn

    @classmethod
    def from_cache(cls, model: TinyLM, cache: BasisCache) -> "LMPolicy":
        return cls(model, lambda n: lookup(cache, n))

    def logprob(self, context: Sequence[int], response: Sequence[int]) -> Tensor:
        if len(response) == 0:
            raise InvalidArgumentError("response must be non-empty")
        tokens = [BOS] + list(context) + list(response)
        inputs = np.asarray(tokens[:-1])
        targets = np.asarray(tokens[1:])
        n = inputs.size
        logp = self.model.token_logprobs(inputs, targets, np.arange(1, n + 1, dtype=np.float64), self.basis_fn(n))
        return logp[len(context):].sum()


def seq_logprob(policy: SequencePolicy, context: Sequence[int], response: Sequence[int]) -> float:
    if len(response) == 0:
        raise InvalidArgumentError("response must be non-empty")
    with no_grad():
        return policy.logprob(context, response).item()


def dpo_loss(policy: SequencePolicy, ref: SequencePolicy, quad: PreferenceQuadruple, beta: float) -> float:
    """Standard DPO: policy and reference both read the long input x_L."""
    x = quad.x_l
    with no_grad():
        return preference_loss(
            beta,
            policy.logprob(x, quad.y_s),
            ref.logprob(x, quad.y_s),
            policy.logprob(x, quad.y_l),
            ref.logprob(x, quad.y_l),
        ).item()


def longpo_loss(policy: SequencePolicy, short_ref: SequencePolicy, quad: PreferenceQuadruple, beta: float) -> float:
    """Policy reads x_L, the short-context reference reads x_S."""
    with no_grad():
        return preference_loss(
            beta,
            policy.logprob(quad.x_l, quad.y_s),
            short_ref.logprob(quad.x_s, quad.y_s),
            policy.logprob(quad.x_l, quad.y_l),
            short_ref.logprob(quad.x_s, quad.y_l),
        ).item()


def turn_logprobs(policy: SequencePolicy, sample: MultiTurnSample, long_context: bool) -> tuple[list[Tensor], list[Tensor]]:
    """Per-turn log-probabilities of the chosen and rejected answers."""
    chosen, rejected = [], []
    for quad in sample.quadruples():
        x = quad.x_l if long_context else quad.x_s
        chosen.append(policy.logprob(x, quad.y_s))
        rejected.append(policy.logprob(x, quad.y_l))
    return chosen, rejected


def mt_loss_tensor(
    policy: SequencePolicy,
    short_ref: SequencePolicy,
    sample: MultiTurnSample,
    beta: float,
    aggregation: Aggregation = Aggregation.SUM_LOGPROB,
) -> Tensor:
    policy_w, policy_l = turn_logprobs(policy, sample, long_context=True)
    with no_grad():
        ref_w, ref_l = turn_logprobs(short_ref, sample, long_context=False)
    return multiturn_preference_loss(beta, policy_w, ref_w, policy_l, ref_l, aggregation)


def longpo_mt_loss(
    policy: SequencePolicy,
    short_ref: SequencePolicy,
    sample: MultiTurnSample,
    beta: float,
    aggregation: Aggregation = Aggregation.SUM_LOGPROB,
) -> float:
    with no_grad():
        return mt_loss_tensor(policy, short_ref, sample, beta, aggregation).item()


def nll_tensor(policy: SequencePolicy, s_l: Sequence[int]) -> Tensor:
    if len(s_l) == 0:
        raise InvalidArgumentError("NLL needs a non-empty sequence")
    return length_normalized_nll(policy.logprob([], s_l), len(s_l))


def nll_loss(policy: SequencePolicy, s_l: Sequence[int]) -> float:
    """-log pi(S_L) / |S_L|."""
    with no_grad():
        return nll_tensor(policy, s_l).item()


def final_loss(
    policy: SequencePolicy,
    short_ref: SequencePolicy,
    sample: MultiTurnSample,
    beta: float,
    lambda_w: float,
    aggregation: Aggregation = Aggregation.SUM_LOGPROB,
) -> float:
    with no_grad():
        mt = mt_loss_tensor(policy, short_ref, sample, beta, aggregation)
        nll = nll_tensor(policy, sample.chosen_sequence())
        return float(combine_final(mt, nll, lambda_w).item())


def stl_constraint_estimate(policy_logps_long: Sequence[float], shortref_logps_short: Sequence[float], beta: float) -> float:
    """Single-sample estimate of beta * KL(pi(.|x_L) || pi_short(.|x_S)).

    Averages the log-ratio over the responses at hand; these are not draws
    from the policy, so the value is a diagnostic, not an exact KL.
    """
    if len(policy_logps_long) != len(shortref_logps_short) or not policy_logps_long:
        raise InvalidArgumentError("need matching, non-empty log-probability lists")
    ratios = np.asarray(policy_logps_long, dtype=np.float64) - np.asarray(shortref_logps_short, dtype=np.float64)
    return float(beta * ratios.mean())
