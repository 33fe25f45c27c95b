from .metrics import MetricsWriter, read_metrics
from .seeds import SeedStreams, stream_key
from .verify import SLOW_SUITES, SUITES, SuiteResult, run_suites
from .commands import (
    COMMANDS,
    batch_source,
    cmd_cache_basis,
    cmd_eval_extrapolate,
    cmd_gen_prefs,
    cmd_train_longpo,
    cmd_train_lm,
    cmd_verify,
    make_corpus,
    open_metrics,
    run_longpo,
)
from .experiments import TRENDS, cmd_trends, extrapolation_trend, reward_margin_trend, variant

__all__ = [
    "MetricsWriter",
    "read_metrics",
    "SeedStreams",
    "stream_key",
    "SLOW_SUITES",
    "SUITES",
    "SuiteResult",
    "run_suites",
    "COMMANDS",
    "batch_source",
    "cmd_cache_basis",
    "cmd_eval_extrapolate",
    "cmd_gen_prefs",
    "cmd_train_longpo",
    "cmd_train_lm",
    "cmd_verify",
    "make_corpus",
    "open_metrics",
    "run_longpo",
    "TRENDS",
    "cmd_trends",
    "extrapolation_trend",
    "reward_margin_trend",
    "variant",
]
