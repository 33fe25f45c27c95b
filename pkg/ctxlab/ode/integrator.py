"""
Fixed-step integration of the frequency dynamics.

The integrator runs on the autograd tape, so gradients are the exact reverse
mode of the discrete scheme (discretize-then-differentiate); no adjoint solve.
"""
from __future__ import annotations

import logging
from typing import Callable

import numpy as np

from ..autograd import Adam, Tensor, as_tensor, cosine_lr, no_grad
from ..errors import InvalidArgumentError, NumericOverflowError
from ..rope import AlphaSchedule, FrequencyBasis, alpha
from ..utils.enum import IntegratorMethod
from ..utils.validators import IntegratorConfig
from .dynamics import PARAM_NAMES, OdeDynamics

logger = logging.getLogger(__name__)

VectorField = Callable[[Tensor, float], Tensor]


def _step(field: VectorField, method: IntegratorMethod, z: Tensor, t: float, h: float) -> Tensor:
    if method is IntegratorMethod.EULER:
        return z + h * field(z, t)
    half = 0.5 * h
    k1 = field(z, t)
    k2 = field(z + half * k1, t + half)
    k3 = field(z + half * k2, t + half)
    k4 = field(z + h * k3, t + h)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_tensor(
    dyn: OdeDynamics | None,
    z1: Tensor,
    t_target: float,
    cfg: IntegratorConfig,
    t_start: float = 1.0,
    field: VectorField | None = None,
) -> Tensor:
    """Integrate ``dz/dt = g(z, t)`` from ``t_start`` to ``t_target`` on the tape."""
    if t_start < 1.0 or t_target < t_start:
        raise InvalidArgumentError(f"need 1 <= t_start <= t_target, got {t_start} and {t_target}")
    if field is None:
        if dyn is None:
            raise InvalidArgumentError("either dynamics or a vector field is required")
        field = dyn.field
    if t_target == t_start:
        return z1

    n_steps = cfg.n_steps(t_start, t_target)
    h = (t_target - t_start) / n_steps
    z = z1
    for step in range(n_steps):
        t = t_start + step * h
        z = _step(field, cfg.method, z, t, h)
        if not np.all(np.isfinite(z.data)):
            raise NumericOverflowError(step + 1)
    return z


def integrate(
    dyn: OdeDynamics | None,
    z1,
    t_target: float,
    cfg: IntegratorConfig,
    t_start: float = 1.0,
    field: VectorField | None = None,
) -> np.ndarray:
    z1 = np.asarray(z1, dtype=np.float64)
    if t_target == t_start:
        return z1.copy()
    with no_grad():
        return integrate_tensor(dyn, as_tensor(z1), t_target, cfg, t_start, field).data.copy()


def _to_basis(values: np.ndarray, n_steps: int) -> FrequencyBasis:
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        raise NumericOverflowError(n_steps, "scaled basis overflowed or underflowed after exp")
    return FrequencyBasis(values)


def basis_tensor(dyn: OdeDynamics, base: FrequencyBasis, t_prime: float, cfg: IntegratorConfig) -> Tensor:
    """Differentiable ``exp(z(t'))``; a constant at t' = 1."""
    if t_prime == 1.0:
        return Tensor(base.values)
    z = integrate_tensor(dyn, Tensor(np.log(base.values)), t_prime, cfg)
    out = z.exp()
    if not np.all(np.isfinite(out.data)) or np.any(out.data <= 0.0):
        raise NumericOverflowError(cfg.n_steps(1.0, t_prime), "scaled basis overflowed or underflowed after exp")
    return out


def basis_at(dyn: OdeDynamics, base: FrequencyBasis, t_prime: float, cfg: IntegratorConfig) -> FrequencyBasis:
    if t_prime < 1.0:
        raise InvalidArgumentError(f"t' must be >= 1, got {t_prime}")
    if t_prime == 1.0:
        return base
    z = integrate(dyn, np.log(base.values), t_prime, cfg)
    return _to_basis(np.exp(z), cfg.n_steps(1.0, t_prime))


def sample_t(rng: np.random.Generator, t_max: float) -> float:
    """Uniform t' in [1, t_max]."""
    if not np.isfinite(t_max) or t_max < 1.0:
        raise InvalidArgumentError(f"t_max must be finite and >= 1, got {t_max}")
    return float(rng.uniform(1.0, t_max))


def param_gradients(
    dyn: OdeDynamics,
    z1,
    t_target: float,
    cfg: IntegratorConfig,
    upstream,
    through_exp: bool = False,
) -> dict[str, np.ndarray]:
    """Gradients of ``<upstream, z(t_target)>`` w.r.t. every dynamics parameter.

    With ``through_exp`` the upstream vector is taken as dL/dtheta and chained
    through ``theta = exp(z)``.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    dyn.zero_grad()
    z = integrate_tensor(dyn, Tensor(np.asarray(z1, dtype=np.float64)), t_target, cfg)
    out = z.exp() if through_exp else z
    (out * upstream).sum().backward()
    grads = {
        name: (dyn.params[name].grad.copy() if dyn.params[name].grad is not None else np.zeros_like(dyn.params[name].data))
        for name in PARAM_NAMES
    }
    dyn.zero_grad()
    return grads


def fit_schedule(
    dyn: OdeDynamics,
    base: FrequencyBasis,
    schedule: AlphaSchedule,
    t_grid,
    cfg: IntegratorConfig,
    steps: int = 2000,
    lr: float = 0.02,
) -> list[float]:
    """Train ``dyn`` so that ``z(t)`` follows a discrete schedule's log-chain on ``t_grid``.

    The loss is the mean squared error between ``z(t)`` and
    ``log(base) + log(alpha(t))``; returns the loss history.
    """
    t_grid = sorted(float(t) for t in t_grid)
    if not t_grid or t_grid[0] < 1.0:
        raise InvalidArgumentError("t_grid must be a non-empty set of values >= 1")
    z1 = np.log(base.values)
    targets = [z1 + np.log(alpha(schedule, t, base.dims)) for t in t_grid]
    optimizer = Adam(dyn.params, lr=lr)
    history: list[float] = []
    for step in range(steps):
        optimizer.zero_grad()
        loss = None
        for t, target in zip(t_grid, targets):
            diff = integrate_tensor(dyn, Tensor(z1), t, cfg) - target
            term = (diff * diff).mean()
            loss = term if loss is None else loss + term
        loss = loss * (1.0 / len(t_grid))
        loss.backward()
        optimizer.step(cosine_lr(lr, step, steps))
        history.append(loss.item())
        if step % 500 == 0:
            logger.debug("fit_schedule step %d loss %.3e", step, history[-1])
    return history
