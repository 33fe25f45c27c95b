import json
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Type, Union, get_args, get_origin

import json5
from pydantic import ValidationError

from ..errors import ConfigError
from ..utils.serialization import write_json
from ..utils.validators import (
    GenConfig,
    IntegratorConfig,
    LongPOConfig,
    ModelConfig,
    TrainConfig,
)
from .variables.base import BaseConfig
from .variables.default import DEFAULT_CONFIG


class Config:
    """Run configuration for ctxlab.

    Resolution order: defaults, then the config file, then ``CTXLAB_<KEY>``
    environment variables, then explicit overrides (command-line flags).
    """

    ENV_PREFIX = "CTXLAB_"

    def __init__(self, config_path: str | None = None, overrides: Mapping[str, Any] | None = None):
        self.config_path = config_path
        config_to_use = self.load_config(config_path)
        self._set_attributes(config_to_use, overrides or {})
        self._validate()

    def _set_attributes(self, config: Dict[str, Any], overrides: Mapping[str, Any]) -> None:
        resolved = dict(config)
        for key in resolved:
            env_value = os.getenv(self.ENV_PREFIX + key)
            if env_value is not None:
                resolved[key] = self.convert_env_value(key, env_value, BaseConfig.__annotations__[key])
        for key, value in overrides.items():
            key = self._check_key(key)
            if isinstance(value, str):
                value = self.convert_env_value(key, value, BaseConfig.__annotations__[key])
            resolved[key] = value
        self._values = resolved
        for key, value in resolved.items():
            setattr(self, key.lower(), value)

    @staticmethod
    def _check_key(key: str) -> str:
        upper = key.upper()
        if upper not in BaseConfig.__annotations__:
            raise ConfigError(f"unknown configuration key: {key}")
        return upper

    @classmethod
    def load_config(cls, config_path: str | None) -> Dict[str, Any]:
        """Merge a JSON or ``KEY=value`` file over the defaults."""
        if config_path is None:
            return DEFAULT_CONFIG.copy()
        if not os.path.exists(config_path):
            raise ConfigError(f"configuration not found at '{config_path}'")

        text = Path(config_path).read_text(encoding="utf-8")
        if text.lstrip().startswith("{"):
            try:
                custom_config = json5.loads(text)
            except ValueError as e:
                raise ConfigError(f"{config_path}: {e}") from e
        else:
            custom_config = cls._parse_key_values(config_path, text)

        # Merge with default config to ensure all keys are present
        merged_config = DEFAULT_CONFIG.copy()
        for key, value in custom_config.items():
            merged_config[cls._check_key(key)] = value
        return merged_config

    @classmethod
    def _parse_key_values(cls, config_path: str, text: str) -> Dict[str, Any]:
        values = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{config_path}:{lineno}: expected KEY=value")
            key, raw = (part.strip() for part in line.split("=", 1))
            key = cls._check_key(key)
            values[key] = cls.convert_env_value(key, raw, BaseConfig.__annotations__[key])
        return values

    @staticmethod
    def convert_env_value(key: str, env_value: str, type_hint: Type) -> Any:
        """Convert a string value to the appropriate type based on the type hint."""
        origin = get_origin(type_hint)
        args = get_args(type_hint)

        if origin is Union:
            # Handle Union types (e.g., Union[str, None]); null spellings win over str
            if type(None) in args and env_value.lower() in ("none", "null", ""):
                return None
            for arg in args:
                if arg is type(None):
                    continue
                try:
                    return Config.convert_env_value(key, env_value, arg)
                except (ValueError, ConfigError):
                    continue
            raise ConfigError(f"Cannot convert {key}={env_value} to any of {args}")

        try:
            if type_hint is bool:
                return env_value.lower() in ("true", "1", "yes", "on")
            elif type_hint is int:
                return int(env_value)
            elif type_hint is float:
                return float(env_value)
            elif type_hint in (str, Any):
                return env_value
            elif type_hint is list or origin is list or origin is List:
                value = json.loads(env_value)
                if not isinstance(value, list):
                    raise ValueError(f"{env_value} is not a list")
                return value
            elif type_hint is dict:
                return json.loads(env_value)
        except ValueError as e:
            raise ConfigError(f"Cannot convert {key}={env_value}: {e}") from e
        raise ConfigError(f"Unsupported type {type_hint} for key {key}")

    def _validate(self) -> None:
        for key, hint in BaseConfig.__annotations__.items():
            value = self._values[key]
            expected = get_args(hint) if get_origin(hint) is Union else (hint,)
            expected = tuple(get_origin(t) or t for t in expected)
            if float in expected and isinstance(value, int) and not isinstance(value, bool):
                continue
            if not isinstance(value, expected):
                raise ConfigError(f"{key} must be of type {hint}, got {value!r}")
        # building the typed configs surfaces range errors early
        try:
            self.train_config().check_lengths(self.model_config())
        except ValueError as e:
            raise ConfigError(str(e)) from e
        self.gen_config()
        self.longpo_config()

    # ----------------------------------------------------------------- views

    def to_dict(self) -> Dict[str, Any]:
        return dict(self._values)

    def snapshot(self, path: str | Path) -> Path:
        """Write the resolved configuration as sorted JSON."""
        return write_json(path, self.to_dict())

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)

    def artifact(self, key: str, default_name: str) -> Path:
        value = self._values[key]
        return Path(value) if value else self.out_path / default_name

    def _build(self, model_cls, **kwargs):
        try:
            return model_cls(**kwargs)
        except ValidationError as e:
            raise ConfigError(f"invalid {model_cls.__name__}: {e}") from e

    def model_config(self) -> ModelConfig:
        return self._build(
            ModelConfig,
            vocab_size=self.vocab_size,
            n_layers=self.n_layers,
            n_heads=self.n_heads,
            head_dim=self.head_dim,
            ffn_mult=self.ffn_mult,
            context_len=self.context_len,
            rope_base=self.rope_base,
            seed=self.seed,
        )

    def integrator_config(self) -> IntegratorConfig:
        return self._build(IntegratorConfig, method=self.integrator, steps_per_unit_t=self.steps_per_unit_t)

    def train_config(self) -> TrainConfig:
        return self._build(
            TrainConfig,
            steps=self.train_steps,
            batch_size=self.batch_size,
            lr=self.lr,
            warmup_steps=self.warmup_steps,
            t_max=self.t_max,
            sampler_mode=self.sampler_mode,
            integrator=self.integrator_config(),
            l_train=self.l_train,
            scaling=self.scaling,
            yarn_s=self.yarn_s,
            ode_amp=self.ode_amp,
            freeze_model=self.freeze_model,
            grad_clip=self.grad_clip,
        )

    def gen_config(self) -> GenConfig:
        return self._build(
            GenConfig,
            min_doc_len=self.gen_min_doc_len,
            max_doc_len=self.gen_max_doc_len,
            facts_per_doc=self.gen_facts_per_doc,
            max_chunks_per_doc=self.gen_max_chunks_per_doc,
            chunk_len_max=self.gen_chunk_len_max,
            instructions_per_doc=self.gen_instructions_per_doc,
            instruction_temperature=self.gen_temperature,
            nucleus_p=self.gen_nucleus_p,
            max_decode_len=self.gen_max_decode_len,
            ngram_n=self.gen_ngram_n,
            ngram_max_count=self.gen_ngram_max_count,
            drop_ties=self.gen_drop_ties,
            model_checkpoint=self.checkpoint,
        )

    def longpo_config(self) -> LongPOConfig:
        return self._build(
            LongPOConfig,
            beta=self.po_beta,
            lambda_w=self.po_lambda,
            objective=self.po_objective,
            aggregation=self.po_aggregation,
            steps=self.po_steps,
            batch_size=self.po_batch_size,
            lr=self.po_lr,
            grad_clip=self.po_grad_clip,
        )
