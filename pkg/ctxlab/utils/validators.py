import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .enum import Aggregation, IntegratorMethod, Objective, SamplerMode, ScalingMethod


class IntegratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: IntegratorMethod = IntegratorMethod.RK4
    steps_per_unit_t: int = Field(default=4, ge=1)

    def n_steps(self, t_start: float, t_end: float) -> int:
        return max(1, math.ceil(self.steps_per_unit_t * (t_end - t_start)))


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    vocab_size: int = Field(default=64, ge=2)
    n_layers: int = Field(default=2, ge=1)
    n_heads: int = Field(default=4, ge=1)
    head_dim: int = Field(default=16, ge=2)
    ffn_mult: int = Field(default=4, ge=1)
    context_len: int = Field(default=64, ge=1, description="Native (pretraining) context length L")
    rope_base: float = Field(default=100.0, gt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_head_dim(self):
        if self.head_dim % 2:
            raise ValueError("head_dim must be even")
        return self

    @property
    def d_model(self) -> int:
        return self.n_heads * self.head_dim


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    steps: int = Field(default=200, ge=0)
    batch_size: int = Field(default=8, ge=1)
    lr: float = Field(default=3e-3, ge=0.0)
    warmup_steps: int = Field(default=0, ge=0)
    t_max: float = Field(default=4.0, ge=1.0)
    sampler_mode: SamplerMode = SamplerMode.RANDOM
    integrator: IntegratorConfig = IntegratorConfig()
    l_train: int = Field(default=64, ge=2)
    scaling: ScalingMethod = ScalingMethod.ODE
    yarn_s: float = Field(default=1.0, gt=0.0)
    ode_amp: int = Field(default=1, ge=1)
    freeze_model: bool = False
    grad_clip: float = Field(default=1.0, gt=0.0)

    def check_lengths(self, model_cfg: ModelConfig) -> None:
        """t_max must cover the trained length: t_max * L >= L_train."""
        if self.t_max * model_cfg.context_len < self.l_train:
            raise ValueError(
                f"t_max={self.t_max} is below L_train/L={self.l_train}/{model_cfg.context_len}"
            )


class GenConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    min_doc_len: int = Field(default=512, ge=8)
    max_doc_len: int = Field(default=4096, ge=8)
    facts_per_doc: int = Field(default=8, ge=1)
    max_chunks_per_doc: int = Field(default=4, ge=1)
    chunk_len_max: int = Field(default=256, ge=8)
    instructions_per_doc: int = Field(default=4, ge=1)
    instruction_temperature: float = Field(default=0.7, gt=0.0, le=2.0)
    nucleus_p: float = Field(default=0.9, gt=0.0, le=1.0)
    max_decode_len: int = Field(default=8, ge=1)
    ngram_n: int = Field(default=3, ge=1)
    ngram_max_count: int = Field(default=2, ge=1)
    drop_ties: bool = Field(default=False, description="Drop turns whose chosen and rejected responses are identical")
    model_checkpoint: str | None = None

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.min_doc_len > self.max_doc_len:
            raise ValueError("min_doc_len must not exceed max_doc_len")
        return self


class LongPOConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float = Field(default=0.1, gt=0.0)
    lambda_w: float = Field(default=0.01, ge=0.0)
    objective: Objective = Objective.LONGPO
    aggregation: Aggregation = Aggregation.SUM_LOGPROB
    steps: int = Field(default=500, ge=0)
    batch_size: int = Field(default=1, ge=1)
    lr: float = Field(default=1e-3, ge=0.0)
    grad_clip: float = Field(default=1.0, gt=0.0)
