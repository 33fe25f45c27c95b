"""
A small decoder-only transformer over the autograd tape.

Pre-norm blocks (RMSNorm, causal multi-head attention with RoPE, SiLU MLP),
weights in row convention (``x @ W``). Every head consumes the same frequency
basis, which may be a constant ``FrequencyBasis`` or a differentiable
``Tensor`` coming out of the ODE integrator.
"""
from __future__ import annotations

import math
from typing import Any, Mapping, Union

import numpy as np

from ..autograd import Tensor, no_grad, parameter, stack
from ..errors import CheckpointError, InvalidArgumentError
from ..rope import FrequencyBasis, PositionSchedule, make_basis
from ..utils.serialization import decode_array, encode_array
from ..utils.validators import ModelConfig

BOS = 0
MASK_VALUE = -1e9
NORM_EPS = 1e-6

BasisLike = Union[FrequencyBasis, Tensor, None]


def _layer_names(i: int) -> list[str]:
    return [f"layers.{i}.{n}" for n in ("ln1", "wq", "wk", "wv", "wo", "ln2", "w1", "w2")]


class TinyLM:
    def __init__(self, cfg: ModelConfig, params: Mapping[str, np.ndarray] | None = None):
        self.cfg = cfg
        if params is None:
            params = self._init_params(cfg)
        expected = self.param_shapes(cfg)
        missing = set(expected) - set(params)
        if missing:
            raise CheckpointError(f"model parameters missing: {sorted(missing)}")
        self.params: dict[str, Tensor] = {}
        for name, shape in expected.items():
            value = np.asarray(params[name], dtype=np.float64)
            if value.shape != shape:
                raise CheckpointError(f"parameter {name} has shape {value.shape}, expected {shape}")
            self.params[name] = parameter(value, name)

    @staticmethod
    def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
        D, V, F = cfg.d_model, cfg.vocab_size, cfg.ffn_mult * cfg.d_model
        shapes: dict[str, tuple[int, ...]] = {"tok_emb": (V, D)}
        for i in range(cfg.n_layers):
            ln1, wq, wk, wv, wo, ln2, w1, w2 = _layer_names(i)
            shapes.update({ln1: (D,), wq: (D, D), wk: (D, D), wv: (D, D), wo: (D, D),
                           ln2: (D,), w1: (D, F), w2: (F, D)})
        shapes["ln_f"] = (D,)
        shapes["lm_head"] = (D, V)
        return shapes

    @classmethod
    def _init_params(cls, cfg: ModelConfig) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(cfg.seed)
        params = {}
        for name, shape in cls.param_shapes(cfg).items():
            if len(shape) == 1:
                params[name] = np.ones(shape)
            else:
                params[name] = rng.normal(0.0, 0.02, size=shape)
        return params

    @property
    def base_basis(self) -> FrequencyBasis:
        return make_basis(self.cfg.head_dim, self.cfg.rope_base)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())

    # ------------------------------------------------------------------ forward

    def _check_tokens(self, tokens) -> np.ndarray:
        tokens = np.asarray(tokens)
        if tokens.ndim not in (1, 2) or tokens.shape[-1] == 0:
            raise InvalidArgumentError(f"tokens must be a non-empty (T,) or (B, T) array, got shape {tokens.shape}")
        if not np.issubdtype(tokens.dtype, np.integer):
            raise InvalidArgumentError("token ids must be integers")
        if tokens.min() < 0 or tokens.max() >= self.cfg.vocab_size:
            raise InvalidArgumentError(f"token ids must lie in [0, {self.cfg.vocab_size})")
        return tokens

    @staticmethod
    def _positions(positions, length: int) -> np.ndarray:
        if isinstance(positions, PositionSchedule):
            positions = positions.positions
        positions = np.asarray(positions, dtype=np.float64)
        if positions.shape != (length,):
            raise InvalidArgumentError(f"expected {length} positions, got shape {positions.shape}")
        if not np.all(np.isfinite(positions)) or np.any(positions < 0.0):
            raise InvalidArgumentError("positions must be finite and non-negative")
        return positions

    def _rotate(self, x: Tensor, cos: Tensor, sin: Tensor) -> Tensor:
        even, odd = x[..., 0::2], x[..., 1::2]
        pairs = stack([even * cos - odd * sin, even * sin + odd * cos], axis=-1)
        return pairs.reshape(*x.shape)

    @staticmethod
    def _rms_norm(x: Tensor, gain: Tensor) -> Tensor:
        return x * ((x * x).mean(axis=-1, keepdims=True) + NORM_EPS) ** -0.5 * gain

    def forward(self, tokens, positions, basis: BasisLike = None) -> Tensor:
        """Logits of shape (T, V), or (B, T, V) for a batch sharing one schedule.

        ``basis=None`` disables the rotation entirely.
        """
        tokens = self._check_tokens(tokens)
        batched = tokens.ndim == 2
        if not batched:
            tokens = tokens[None, :]
        B, T = tokens.shape
        positions = self._positions(positions, T)
        cfg = self.cfg
        H, d, D = cfg.n_heads, cfg.head_dim, cfg.d_model

        cos = sin = None
        if basis is not None:
            theta = basis if isinstance(basis, Tensor) else Tensor(basis.values)
            if theta.shape != (d // 2,):
                raise InvalidArgumentError(f"basis has {theta.shape[0]} frequencies, head needs {d // 2}")
            angles = Tensor(positions[:, None]) * theta.reshape(1, d // 2)
            cos, sin = angles.cos(), angles.sin()

        mask = np.triu(np.full((T, T), MASK_VALUE), k=1)
        scale = 1.0 / math.sqrt(d)
        p = self.params
        x = p["tok_emb"][tokens]
        for i in range(cfg.n_layers):
            ln1, wq, wk, wv, wo, ln2, w1, w2 = _layer_names(i)
            h = self._rms_norm(x, p[ln1])
            q = (h @ p[wq]).reshape(B, T, H, d).transpose(0, 2, 1, 3)
            k = (h @ p[wk]).reshape(B, T, H, d).transpose(0, 2, 1, 3)
            v = (h @ p[wv]).reshape(B, T, H, d).transpose(0, 2, 1, 3)
            if cos is not None:
                q = self._rotate(q, cos, sin)
                k = self._rotate(k, cos, sin)
            scores = (q @ k.transpose(0, 1, 3, 2)) * scale + mask
            attn = scores.softmax(axis=-1) @ v
            x = x + attn.transpose(0, 2, 1, 3).reshape(B, T, D) @ p[wo]
            h = self._rms_norm(x, p[ln2])
            x = x + (h @ p[w1]).silu() @ p[w2]
        logits = self._rms_norm(x, p["ln_f"]) @ p["lm_head"]
        return logits if batched else logits.reshape(T, cfg.vocab_size)

    __call__ = forward

    def token_logprobs(self, tokens, targets, positions, basis: BasisLike = None) -> Tensor:
        """log p(targets[..., j] | tokens[..., :j+1]) for every slot."""
        targets = self._check_tokens(targets)
        logp = self.forward(tokens, positions, basis).log_softmax(axis=-1)
        if targets.ndim == 1:
            return logp[np.arange(targets.shape[0]), targets]
        B, T = targets.shape
        return logp[np.arange(B)[:, None], np.arange(T)[None, :], targets]

    def lm_loss(self, sequences, positions, basis: BasisLike = None) -> Tensor:
        """Mean next-token NLL; the model reads ``[BOS] + seq[:-1]`` and predicts ``seq``."""
        sequences = self._check_tokens(sequences)
        if sequences.ndim == 1:
            sequences = sequences[None, :]
        inputs = np.concatenate([np.full((sequences.shape[0], 1), BOS), sequences[:, :-1]], axis=1)
        return -self.token_logprobs(inputs, sequences, positions, basis).mean()

    # -------------------------------------------------------------- persistence

    def to_record(self) -> dict[str, Any]:
        return {name: encode_array(p.data) for name, p in self.params.items()}

    @classmethod
    def from_record(cls, cfg: ModelConfig, record: Mapping[str, Any]) -> "TinyLM":
        return cls(cfg, {name: decode_array(value) for name, value in record.items()})

    def copy(self) -> "TinyLM":
        return TinyLM(self.cfg, {name: p.data.copy() for name, p in self.params.items()})


def greedy_decode(model: TinyLM, context, basis_fn, max_new: int, eos: int | None = None) -> tuple[list[int], bool]:
    """Greedy continuation of ``context``.

    ``basis_fn(length)`` returns the basis for a sequence of ``length`` input
    tokens (for instance a cache lookup). Returns the new tokens and whether
    the ``max_new`` cap was hit before ``eos``.
    """
    if max_new < 1:
        raise InvalidArgumentError(f"max_new must be >= 1, got {max_new}")
    tokens = [BOS] + [int(t) for t in context]
    generated: list[int] = []
    with no_grad():
        for _ in range(max_new):
            n = len(tokens)
            logits = model.forward(np.asarray(tokens), np.arange(1, n + 1, dtype=np.float64), basis_fn(n))
            nxt = int(np.argmax(logits.data[-1]))
            generated.append(nxt)
            tokens.append(nxt)
            if eos is not None and nxt == eos:
                return generated, False
    return generated, True
