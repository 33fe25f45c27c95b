"""
Trend experiments run by ``ctxlab trends``.

Unlike the ``verify`` suites these train models end to end, so they are slow.
Each one works in sub-directories of the output directory and reports a
``SuiteResult``.
"""
from __future__ import annotations

import logging
from typing import Any, Callable

from ..config import Config
from ..errors import InvalidArgumentError
from .commands import (
    METRICS_FILE,
    cmd_eval_extrapolate,
    cmd_gen_prefs,
    cmd_train_lm,
    cmd_train_longpo,
    open_metrics,
)
from .metrics import read_metrics
from .verify import SuiteResult

logger = logging.getLogger(__name__)

SCALED_RATIO_MAX = 1.5
BASELINE_RATIO_MIN = 3.0
REWARD_MARGIN_MIN = 0.5


def variant(config: Config, name: str, **overrides: Any) -> Config:
    """``config`` with ``overrides``, writing every artifact under ``<OUT_DIR>/<name>``."""
    values = {
        **config.to_dict(),
        "CHECKPOINT": None,
        "CACHE_FILE": None,
        "DATASET": None,
        **overrides,
        "OUT_DIR": str(config.out_path / name),
    }
    return Config(overrides=values)


def _longest_ratio(config: Config) -> float:
    cmd_train_lm(config)
    cmd_eval_extrapolate(config)
    evals = read_metrics(config.out_path / METRICS_FILE, command="eval-extrapolate")
    return evals[-1]["ppl_ratio"]


def extrapolation_trend(config: Config) -> SuiteResult:
    """Perplexity growth from the shortest to the longest eval length.

    The configured model (ODE scaling, position extrapolation up to T_MAX) must
    stay within ``SCALED_RATIO_MAX``; the same model trained with fixed RoPE and
    no extrapolation must degrade by at least ``BASELINE_RATIO_MIN``.
    """
    scaled = _longest_ratio(variant(config, "scaled"))
    baseline = _longest_ratio(variant(config, "baseline", SCALING="none", T_MAX=1.0))
    passed = scaled <= SCALED_RATIO_MAX and baseline >= BASELINE_RATIO_MIN
    return SuiteResult("extrapolation", passed, scaled, SCALED_RATIO_MAX,
                       {"baseline_ppl_ratio": baseline, "baseline_threshold": BASELINE_RATIO_MIN,
                        "eval_lengths": sorted(int(n) for n in config.eval_lengths)})


def reward_margin_trend(config: Config) -> SuiteResult:
    """Facts pretraining, preference data, then LongPO; the dataset-mean reward margin must pass ``REWARD_MARGIN_MIN``."""
    run = variant(config, "longpo", CORPUS="facts")
    cmd_train_lm(run)
    cmd_gen_prefs(run)
    cmd_train_longpo(run)
    data = read_metrics(run.out_path / METRICS_FILE, command="gen-prefs")[-1]
    summary = read_metrics(run.out_path / METRICS_FILE, command="train-longpo")[-1]
    margin = summary["mean_reward_margin"]
    return SuiteResult("reward_margin", margin > REWARD_MARGIN_MIN, margin, REWARD_MARGIN_MIN,
                       {"initial_mean_reward_margin": summary["initial_mean_reward_margin"],
                        "chosen_accuracy": data["chosen_accuracy"],
                        "rejected_accuracy": data["rejected_accuracy"]})


TRENDS: dict[str, Callable[[Config], SuiteResult]] = {
    "extrapolation": extrapolation_trend,
    "reward_margin": reward_margin_trend,
}


def cmd_trends(config: Config, trend_filter: str | None = None) -> int:
    names = [n.strip() for n in trend_filter.split(",")] if trend_filter else list(TRENDS)
    unknown = [n for n in names if n not in TRENDS]
    if unknown:
        raise InvalidArgumentError(f"unknown trend(s): {', '.join(unknown)}; available: {', '.join(TRENDS)}")
    results = []
    for name in names:
        result = TRENDS[name](config)
        logger.info("%-14s %s (value=%.4f, threshold=%g)", name, "PASS" if result.passed else "FAIL",
                    result.value, result.threshold)
        results.append(result)
    with open_metrics(config, "trends") as writer:
        for result in results:
            writer.write(result.to_record())
    for r in results:
        print(f"{r.name}  {'PASS' if r.passed else 'FAIL'}  {r.value:.4f} (threshold {r.threshold:g})")
    return 0 if all(r.passed for r in results) else 1
