from enum import Enum


class ScalingKind(Enum):
    """Discrete alpha(t) schedules of the unified frequency-basis view."""
    PI = "pi"
    YARN = "yarn"


class ScalingMethod(Enum):
    """How the training loop obtains the frequency basis for a sampled t'."""
    ODE = "ode"
    PI = "pi"
    YARN = "yarn"
    NONE = "none"


class IntegratorMethod(Enum):
    EULER = "euler"
    RK4 = "rk4"


class SamplerMode(Enum):
    UNIFORM = "uniform"
    RANDOM = "random"


class Aggregation(Enum):
    """Multi-turn aggregation of per-turn log-probabilities"""
    SUM_LOGPROB = "sum_logprob"
    SUM_PROB = "sum_prob"


class Objective(Enum):
    LONGPO = "longpo"
    DPO = "dpo"
    SFT = "sft"


class CorpusKind(Enum):
    COPY = "copy"
    FACTS = "facts"
    FILE = "file"
