"""Joint training of the language model and the frequency dynamics, and perplexity evaluation."""
from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from ..autograd import Adam, Tensor, clip_grad_norm, cosine_lr, grad_norm, no_grad
from ..errors import InvalidArgumentError, TrainingDivergedError
from ..ode import (
    BasisCache,
    OdeDynamics,
    basis_at,
    basis_tensor,
    build_cache,
    build_schedule_cache,
    lookup,
    sample_t,
)
from ..rope import AlphaSchedule, FrequencyBasis, fixed_basis, sample_positions
from ..utils.enum import ScalingKind, ScalingMethod
from ..utils.validators import TrainConfig
from ..utils.workers import WorkerPool
from .model import BOS, TinyLM

logger = logging.getLogger(__name__)


def scaling_schedule(cfg: TrainConfig) -> AlphaSchedule | None:
    """The fixed alpha(t) schedule of a baseline method; None for ``ode`` and ``none``."""
    if cfg.scaling is ScalingMethod.PI:
        return AlphaSchedule(kind=ScalingKind.PI)
    if cfg.scaling is ScalingMethod.YARN:
        return AlphaSchedule(kind=ScalingKind.YARN, s=cfg.yarn_s)
    return None


class LMTrainer:
    """Owns the optimizer state for one training run.

    With ``scaling=ode`` each step samples t', integrates the dynamics to get
    the basis and back-propagates through the integrator, so the model and the
    dynamics are updated together (only the dynamics with ``freeze_model``).
    """

    def __init__(
        self,
        model: TinyLM,
        dyn: OdeDynamics | None,
        train_cfg: TrainConfig,
        seed: int = 0,
    ):
        train_cfg.check_lengths(model.cfg)
        if train_cfg.scaling is ScalingMethod.ODE and dyn is None:
            raise InvalidArgumentError("scaling=ode needs frequency dynamics")
        self.model = model
        self.dyn = dyn
        self.cfg = train_cfg
        self.seed = seed
        self.base = model.base_basis
        self.schedule = scaling_schedule(train_cfg)
        self.step = 0

        self.trainable: dict[str, Tensor] = {}
        if not train_cfg.freeze_model:
            self.trainable.update(model.params)
        if dyn is not None and train_cfg.scaling is ScalingMethod.ODE:
            self.trainable.update({f"ode.{name}": p for name, p in dyn.params.items()})
        self.optimizer = Adam(self.trainable, lr=train_cfg.lr)

    def basis_for(self, t_prime: float) -> FrequencyBasis | Tensor:
        if self.cfg.scaling is ScalingMethod.ODE:
            return basis_tensor(self.dyn, self.base, t_prime, self.cfg.integrator)
        if self.schedule is not None:
            return fixed_basis(self.schedule, self.base, t_prime)
        return self.base

    def train_step(self, batch, rng: np.random.Generator, position_rng: np.random.Generator | None = None) -> dict:
        """One optimizer step on ``batch`` (B, L_train); returns the metrics record."""
        cfg = self.cfg
        batch = np.asarray(batch)
        if batch.ndim != 2 or batch.shape[1] != cfg.l_train:
            raise InvalidArgumentError(f"batch must have shape (B, {cfg.l_train}), got {batch.shape}")

        t_prime = sample_t(rng, cfg.t_max)
        # a schedule must fit L_train tokens into t' * L
        t_prime = max(t_prime, cfg.l_train / self.model.cfg.context_len)
        positions = sample_positions(cfg.sampler_mode, position_rng or rng, cfg.l_train, t_prime, self.model.cfg.context_len)
        lr = cosine_lr(cfg.lr, self.step, cfg.steps, cfg.warmup_steps)

        self.optimizer.zero_grad()
        if self.dyn is not None:
            self.dyn.zero_grad()
        loss = self.model.lm_loss(batch, positions, self.basis_for(t_prime))
        record = {
            "step": self.step,
            "loss": loss.item(),
            "t_prime": t_prime,
            "lr": lr,
            "seed": self.seed,
        }
        if not math.isfinite(record["loss"]):
            record["grad_norm"] = None
            raise TrainingDivergedError(record)

        loss.backward()
        ode_params = {k: v for k, v in self.trainable.items() if k.startswith("ode.")}
        record["ode_grad_norm"] = grad_norm(ode_params)
        record["grad_norm"] = clip_grad_norm(self.trainable, cfg.grad_clip)
        self.optimizer.step(lr)
        self.step += 1
        return record


def make_eval_cache(
    cfg: TrainConfig,
    base: FrequencyBasis,
    dyn: OdeDynamics | None,
    t_values: Sequence[float],
    context_len: int,
) -> BasisCache:
    """Inference cache matching how a model was trained."""
    if cfg.scaling is ScalingMethod.ODE:
        return build_cache(dyn, base, t_values, cfg.integrator, context_len)
    return build_schedule_cache(base, t_values, context_len, scaling_schedule(cfg))


def sequence_nll(model: TinyLM, seq: Sequence[int], basis: FrequencyBasis) -> float:
    """Summed next-token NLL of ``seq`` read as ``[BOS] + seq[:-1]`` at positions 1..len."""
    seq = np.asarray(seq)
    inputs = np.concatenate([[BOS], seq[:-1]])
    positions = np.arange(1, seq.size + 1, dtype=np.float64)
    with no_grad():
        return float(-model.token_logprobs(inputs, seq, positions, basis).data.sum())


def evaluate_ppl(
    model: TinyLM,
    corpus: Sequence[Sequence[int]],
    eval_len: int,
    cache: BasisCache,
    pool: WorkerPool | None = None,
) -> float:
    """exp(mean NLL) over the first ``eval_len`` tokens of each corpus sequence.

    The basis comes from ``lookup(cache, eval_len)``.
    """
    basis = lookup(cache, eval_len)
    windows = [list(seq[:eval_len]) for seq in corpus if len(seq) >= eval_len]
    if not windows:
        raise InvalidArgumentError(f"no corpus sequence holds {eval_len} tokens")
    if pool is None:
        nlls = [sequence_nll(model, w, basis) for w in windows]
    else:
        nlls = pool.map(lambda w: sequence_nll(model, w, basis), windows)
    total = math.fsum(nlls)
    return math.exp(total / (len(windows) * eval_len))


def basis_resolver(
    cfg: TrainConfig,
    base: FrequencyBasis,
    dyn: OdeDynamics | None,
    context_len: int,
    cache: BasisCache | None = None,
):
    """``fn(n)`` giving the basis for ``n`` input tokens.

    Lengths covered by ``cache`` use the nearest cached upper bound; longer ones
    are computed at ``t = n / L`` and memoised.
    """
    computed: dict[int, FrequencyBasis] = {}
    schedule = scaling_schedule(cfg)

    def resolve(n: int) -> FrequencyBasis:
        if cache is not None and n <= cache.max_length:
            return lookup(cache, n)
        if n not in computed:
            t = max(1.0, n / context_len)
            if cfg.scaling is ScalingMethod.ODE:
                computed[n] = basis_at(dyn, base, t, cfg.integrator)
            elif schedule is not None:
                computed[n] = fixed_basis(schedule, base, t)
            else:
                computed[n] = base
        return computed[n]

    return resolve
