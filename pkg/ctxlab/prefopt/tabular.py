"""
Exact finite-response policies and the closed-form short-to-long optimum.

Contexts and responses are indices. A short-to-long instance pairs every long
context ``x_L`` with the short context ``x_S = x_s_map[x_L]`` of a reference
policy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ..autograd import Tensor
from ..errors import InvalidArgumentError
from .objectives import kl_divergence

ROW_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TabularPolicy:
    """Row-stochastic table ``probs[x, y] = pi(y | x)``."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 2 or 0 in probs.shape:
            raise InvalidArgumentError(f"policy table must be a non-empty matrix, got shape {probs.shape}")
        if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
            raise InvalidArgumentError("policy probabilities must be finite and non-negative")
        if np.max(np.abs(probs.sum(axis=1) - 1.0)) > ROW_TOLERANCE:
            raise InvalidArgumentError("policy rows must sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n_contexts(self) -> int:
        return self.probs.shape[0]

    @property
    def n_responses(self) -> int:
        return self.probs.shape[1]

    def row(self, x: int) -> np.ndarray:
        return self.probs[x]

    def logprob(self, x: int, y: int) -> float:
        return float(np.log(self.probs[x, y]))

    @classmethod
    def from_logits(cls, logits) -> "TabularPolicy":
        logits = np.asarray(logits, dtype=np.float64)
        return cls(np.exp(logits - logsumexp(logits, axis=1, keepdims=True)))

    @classmethod
    def random(cls, rng: np.random.Generator, n_contexts: int, n_responses: int, concentration: float = 1.0) -> "TabularPolicy":
        return cls(rng.dirichlet(np.full(n_responses, concentration), size=n_contexts))


def _check_instance(short_ref: TabularPolicy, reward, x_s_map: Sequence[int], beta: float) -> tuple[np.ndarray, np.ndarray]:
    if not beta > 0.0:
        raise InvalidArgumentError(f"beta must be positive, got {beta}")
    reward = np.asarray(reward, dtype=np.float64)
    x_s_map = np.asarray(x_s_map, dtype=np.int64)
    if reward.ndim != 2 or reward.shape != (x_s_map.size, short_ref.n_responses):
        raise InvalidArgumentError(
            f"reward table must have shape ({x_s_map.size}, {short_ref.n_responses}), got {reward.shape}"
        )
    if x_s_map.min() < 0 or x_s_map.max() >= short_ref.n_contexts:
        raise InvalidArgumentError("x_s_map points outside the reference policy's contexts")
    return reward, x_s_map


def _optimal_logits(short_ref, reward, x_s_map, beta) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(short_ref.probs[x_s_map]) + reward / beta


def log_partition(short_ref: TabularPolicy, reward, x_s_map: Sequence[int], beta: float) -> np.ndarray:
    """log Z(x_L, x_S) = log sum_y pi_short(y|x_S) exp(r(x_L, y) / beta), one per long context."""
    reward, x_s_map = _check_instance(short_ref, reward, x_s_map, beta)
    return logsumexp(_optimal_logits(short_ref, reward, x_s_map, beta), axis=1)


def optimal_policy(short_ref: TabularPolicy, reward, x_s_map: Sequence[int], beta: float) -> TabularPolicy:
    """pi*(y|x_L) = pi_short(y|x_S) exp(r(x_L, y) / beta) / Z, computed in the log domain."""
    reward, x_s_map = _check_instance(short_ref, reward, x_s_map, beta)
    logits = _optimal_logits(short_ref, reward, x_s_map, beta)
    log_z = logsumexp(logits, axis=1, keepdims=True)
    if not np.all(np.isfinite(log_z)):
        raise InvalidArgumentError("partition function is zero or infinite")
    return TabularPolicy(np.exp(logits - log_z))


def recover_reward(pi_star: TabularPolicy, short_ref: TabularPolicy, x_s_map: Sequence[int], beta: float, log_z=None) -> np.ndarray:
    """r(x_L, y) = beta log(pi*(y|x_L) / pi_short(y|x_S)) + beta log Z.

    Without ``log_z`` the result is the reward up to a per-context constant.
    """
    if not beta > 0.0:
        raise InvalidArgumentError(f"beta must be positive, got {beta}")
    x_s_map = np.asarray(x_s_map, dtype=np.int64)
    ref = short_ref.probs[x_s_map]
    support = ref > 0.0
    if np.any((pi_star.probs > 0.0) & ~support):
        raise InvalidArgumentError("pi* has mass outside the reference support")
    with np.errstate(divide="ignore"):
        reward = beta * (np.log(pi_star.probs) - np.log(ref))
    if log_z is not None:
        reward = reward + beta * np.asarray(log_z, dtype=np.float64)[:, None]
    return reward


def stl_constraint(policy: TabularPolicy, short_ref: TabularPolicy, x_l: int, x_s: int, beta: float) -> float:
    """beta * KL(pi(.|x_L) || pi_short(.|x_S))."""
    if not beta > 0.0:
        raise InvalidArgumentError(f"beta must be positive, got {beta}")
    return beta * kl_divergence(policy.row(x_l), short_ref.row(x_s))


def rlhf_objective_value(
    policy: TabularPolicy,
    ref: TabularPolicy,
    reward,
    x_dist,
    beta: float,
    ref_map: Sequence[int] | None = None,
) -> float:
    """E_x[ E_y[r(x, y)] - beta KL(pi(.|x) || ref(.|ref_map[x])) ], by enumeration.

    ``ref_map=None`` pairs each context with itself; a short-context map gives
    the short-to-long constrained objective.
    """
    reward = np.asarray(reward, dtype=np.float64)
    x_dist = np.asarray(x_dist, dtype=np.float64)
    if reward.shape != policy.probs.shape or x_dist.shape != (policy.n_contexts,):
        raise InvalidArgumentError("reward table and context distribution must match the policy")
    ref_map = list(range(policy.n_contexts)) if ref_map is None else list(ref_map)
    value = 0.0
    for x in range(policy.n_contexts):
        expected = float(np.dot(policy.row(x), reward[x]))
        value += x_dist[x] * (expected - beta * kl_divergence(policy.row(x), ref.row(ref_map[x])))
    return value


def perturb(policy: TabularPolicy, rng: np.random.Generator, scale: float = 0.5) -> TabularPolicy:
    """Random row-stochastic neighbour: multiply by log-normal noise and renormalise."""
    noisy = policy.probs * np.exp(scale * rng.standard_normal(policy.probs.shape))
    return TabularPolicy(noisy / noisy.sum(axis=1, keepdims=True))


class TableSequencePolicy:
    """A tabular policy behind the sequence-policy interface.

    The context's first token selects the row, the response's first token the column.
    """

    def __init__(self, table: TabularPolicy):
        self.table = table

    def logprob(self, context: Sequence[int], response: Sequence[int]) -> Tensor:
        if len(response) == 0:
            raise InvalidArgumentError("response must be non-empty")
        return Tensor(np.log(self.table.probs[context[0], response[0]]))
