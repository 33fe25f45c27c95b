from .objectives import (
    aggregate_turns,
    bt_preference,
    combine_final,
    kl_divergence,
    length_normalized_nll,
    longpo_reward,
    multiturn_preference_loss,
    preference_loss,
    preference_margin,
)
from .tabular import (
    TableSequencePolicy,
    TabularPolicy,
    log_partition,
    optimal_policy,
    perturb,
    recover_reward,
    rlhf_objective_value,
    stl_constraint,
)
from .dataset import MultiTurnSample, PreferenceQuadruple, Turn, load_dataset, save_dataset
from .policies import (
    LMPolicy,
    SequencePolicy,
    dpo_loss,
    final_loss,
    longpo_loss,
    longpo_mt_loss,
    nll_loss,
    seq_logprob,
    stl_constraint_estimate,
)
from .trainer import implicit_rewards, mean_reward_margin, reference_logprobs, train_longpo

__all__ = [
    "aggregate_turns",
    "bt_preference",
    "combine_final",
    "kl_divergence",
    "length_normalized_nll",
    "longpo_reward",
    "multiturn_preference_loss",
    "preference_loss",
    "preference_margin",
    "TableSequencePolicy",
    "TabularPolicy",
    "log_partition",
    "optimal_policy",
    "perturb",
    "recover_reward",
    "rlhf_objective_value",
    "stl_constraint",
    "MultiTurnSample",
    "PreferenceQuadruple",
    "Turn",
    "load_dataset",
    "save_dataset",
    "LMPolicy",
    "SequencePolicy",
    "dpo_loss",
    "final_loss",
    "longpo_loss",
    "longpo_mt_loss",
    "nll_loss",
    "seq_logprob",
    "stl_constraint_estimate",
    "implicit_rewards",
    "mean_reward_margin",
    "reference_logprobs",
    "train_longpo",
]
