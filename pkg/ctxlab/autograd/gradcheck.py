"""Central finite-difference comparison against tape gradients."""
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .tensor import Tensor, no_grad


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_param: str | None
    checked: int

    def passed(self, rtol: float) -> bool:
        return self.max_rel_error <= rtol


def relative_error(analytic: float, numeric: float, atol: float = 1e-6) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), atol)


def numeric_gradient(loss_fn: Callable[[], Tensor], param: Tensor, index: tuple, h: float) -> float:
    original = param.data[index]
    with no_grad():
        param.data[index] = original + h
        plus = loss_fn().item()
        param.data[index] = original - h
        minus = loss_fn().item()
    param.data[index] = original
    return (plus - minus) / (2.0 * h)


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    analytic: Mapping[str, np.ndarray] | None = None,
    h: float = 1e-5,
    samples_per_param: int | None = None,
    rng: np.random.Generator | None = None,
    atol: float = 1e-6,
) -> GradCheckResult:
    """Compare gradients of ``loss_fn`` against central differences.

    ``analytic`` overrides the tape gradients (used to check externally
    computed or perturbed gradients). With ``samples_per_param`` only that many
    random entries of each parameter are probed.
    """
    if analytic is None:
        for p in params.values():
            p.zero_grad()
        loss_fn().backward()
        analytic = {name: (p.grad if p.grad is not None else np.zeros_like(p.data)) for name, p in params.items()}

    rng = rng or np.random.default_rng(0)
    worst, worst_name, checked = 0.0, None, 0
    for name, p in params.items():
        indices = list(np.ndindex(p.data.shape))
        if samples_per_param is not None and len(indices) > samples_per_param:
            chosen = rng.choice(len(indices), size=samples_per_param, replace=False)
            indices = [indices[i] for i in sorted(chosen)]
        for index in indices:
            numeric = numeric_gradient(loss_fn, p, index, h)
            err = relative_error(float(analytic[name][index]), numeric, atol)
            checked += 1
            if err > worst:
                worst, worst_name = err, name
    return GradCheckResult(max_rel_error=worst, worst_param=worst_name, checked=checked)
