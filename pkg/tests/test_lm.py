import math

import numpy as np
import pytest

from ctxlab.autograd import check_gradients
from ctxlab.errors import CheckpointError, InvalidArgumentError, TrainingDivergedError
from ctxlab.lm import (
    Checkpoint,
    LMTrainer,
    TinyLM,
    basis_resolver,
    copy_corpus,
    evaluate_ppl,
    greedy_decode,
    load_token_file,
    make_eval_cache,
    sample_batch,
    scaling_schedule,
    uniform_corpus,
)
from ctxlab.ode import OdeDynamics, build_schedule_cache, lookup
from ctxlab.rope import FrequencyBasis
from ctxlab.utils.enum import ScalingKind
from ctxlab.utils.validators import ModelConfig, TrainConfig


def train_cfg(**overrides):
    values = dict(steps=4, batch_size=2, lr=1e-2, t_max=2.0, l_train=8, sampler_mode="random")
    values.update(overrides)
    return TrainConfig(**values)


# ----------------------------------------------------------------- model


def test_param_shapes(tiny_model):
    shapes = TinyLM.param_shapes(tiny_model.cfg)
    assert shapes["tok_emb"] == (16, 8)
    assert shapes["layers.0.w1"] == (8, 16)
    assert shapes["lm_head"] == (8, 16)
    assert tiny_model.num_parameters() == sum(int(np.prod(s)) for s in shapes.values())


def test_init_is_seeded(tiny_model_cfg):
    a, b = TinyLM(tiny_model_cfg), TinyLM(tiny_model_cfg)
    for name in a.params:
        np.testing.assert_array_equal(a.params[name].data, b.params[name].data)


def test_forward_shapes(tiny_model):
    assert tiny_model.forward([1, 2, 3], [1.0, 2.0, 3.0], tiny_model.base_basis).shape == (3, 16)
    batch = np.array([[1, 2, 3], [4, 5, 6]])
    assert tiny_model.forward(batch, [1.0, 2.0, 3.0], tiny_model.base_basis).shape == (2, 3, 16)


def test_forward_rejects_bad_tokens(tiny_model):
    with pytest.raises(InvalidArgumentError):
        tiny_model.forward([1, 16], [1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        tiny_model.forward([1, 2], [1.0])


def test_single_token_ignores_position(tiny_model):
    a = tiny_model.forward([5], [1.0], tiny_model.base_basis).data
    b = tiny_model.forward([5], [37.5], tiny_model.base_basis).data
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_causality(tiny_model):
    positions = np.arange(1, 7, dtype=float)
    a = tiny_model.forward([1, 2, 3, 4, 5, 6], positions, tiny_model.base_basis).data
    b = tiny_model.forward([1, 2, 3, 9, 9, 9], positions, tiny_model.base_basis).data
    np.testing.assert_allclose(a[:3], b[:3], atol=1e-12)
    assert not np.allclose(a[3:], b[3:])


def test_batch_permutation_invariance(tiny_model, rng):
    batch = rng.integers(0, 16, size=(3, 5))
    positions = np.arange(1, 6, dtype=float)
    out = tiny_model.forward(batch, positions, tiny_model.base_basis).data
    permuted = tiny_model.forward(batch[[2, 0, 1]], positions, tiny_model.base_basis).data
    np.testing.assert_allclose(permuted, out[[2, 0, 1]], atol=1e-12)


def test_vanishing_frequencies_match_no_rotation(tiny_model):
    tiny = FrequencyBasis(np.full(2, 1e-300))
    positions = np.arange(1, 5, dtype=float) * 10
    with_tiny = tiny_model.forward([3, 1, 4, 1], positions, tiny).data
    without = tiny_model.forward([3, 1, 4, 1], positions, None).data
    np.testing.assert_allclose(with_tiny, without, atol=1e-12)


def test_initial_loss_is_near_uniform_entropy():
    cfg = ModelConfig(vocab_size=64, n_layers=2, n_heads=4, head_dim=16, ffn_mult=2, context_len=32, seed=0)
    model = TinyLM(cfg)
    tokens = uniform_corpus(np.random.default_rng(0), 4, 32, 64)
    loss = model.lm_loss(np.array(tokens), np.arange(1, 33, dtype=float), model.base_basis).item()
    assert loss == pytest.approx(math.log(64), rel=0.05)


def test_model_gradients_pass_finite_differences():
    cfg = ModelConfig(vocab_size=8, n_layers=1, n_heads=1, head_dim=4, ffn_mult=2, context_len=8, rope_base=100.0, seed=2)
    model = TinyLM(cfg)
    rng = np.random.default_rng(2)
    for p in model.params.values():
        if p.ndim == 2:
            p.data = rng.normal(0.0, 0.5, size=p.shape)
    tokens = rng.integers(0, 8, size=(2, 5))
    positions = np.array([1.0, 2.0, 3.5, 5.0, 6.0])
    result = check_gradients(lambda: model.lm_loss(tokens, positions, model.base_basis), model.params,
                             samples_per_param=5, rng=rng)
    assert result.passed(1e-3), result


def test_greedy_decode_is_deterministic(tiny_model):
    basis_fn = lambda n: tiny_model.base_basis
    first = greedy_decode(tiny_model, [1, 2, 3], basis_fn, 4)
    second = greedy_decode(tiny_model, [1, 2, 3], basis_fn, 4)
    assert first == second
    tokens, truncated = first
    assert len(tokens) == 4 and truncated


def test_greedy_decode_stops_at_eos(tiny_model):
    basis_fn = lambda n: tiny_model.base_basis
    tokens, _ = greedy_decode(tiny_model, [1, 2, 3], basis_fn, 1)
    stopped, truncated = greedy_decode(tiny_model, [1, 2, 3], basis_fn, 5, eos=tokens[0])
    assert stopped == tokens and not truncated


def test_copy_preserves_params(tiny_model):
    clone = tiny_model.copy()
    clone.params["lm_head"].data[0, 0] += 1.0
    assert tiny_model.params["lm_head"].data[0, 0] != clone.params["lm_head"].data[0, 0]


# ---------------------------------------------------------------- corpus


def test_copy_corpus_repeats_block(rng):
    corpus = copy_corpus(rng, 3, 40, 16, block_len=8)
    for seq in corpus:
        assert len(seq) == 40
        assert seq[8:16] == seq[:8] and seq[32:] == seq[:8]
        assert min(seq) >= 1


def test_copy_corpus_defaults_to_a_copied_first_half(rng):
    for length in (8, 64, 256):
        for seq in copy_corpus(rng, 2, length, 64):
            assert len(seq) == length
            assert seq[length // 2:] == seq[: length // 2]
    odd = copy_corpus(rng, 1, 9, 64)[0]
    assert odd[4:8] == odd[:4] and odd[8] == odd[0]


def test_sample_batch_windows(rng):
    corpus = [list(range(20)), list(range(100, 130))]
    batch = sample_batch(rng, corpus, 4, 10)
    assert batch.shape == (4, 10)
    for row in batch:
        assert np.all(np.diff(row) == 1)
    with pytest.raises(InvalidArgumentError):
        sample_batch(rng, corpus, 1, 31)


def test_load_token_file(tmp_path):
    path = tmp_path / "tokens.txt"
    path.write_text("1 2 3\n\n4 5\n")
    assert load_token_file(path) == [[1, 2, 3], [4, 5]]
    with pytest.raises(InvalidArgumentError):
        load_token_file(path, vocab_size=5)


# --------------------------------------------------------------- trainer


def test_trainer_requires_dynamics_for_ode(tiny_model):
    with pytest.raises(InvalidArgumentError):
        LMTrainer(tiny_model, None, train_cfg())


def test_zero_lr_leaves_parameters(tiny_model, rng):
    dyn = OdeDynamics.initialize(4, 1, rng)
    before = {k: p.data.copy() for k, p in tiny_model.params.items()}
    ode_before = {k: p.data.copy() for k, p in dyn.params.items()}
    trainer = LMTrainer(tiny_model, dyn, train_cfg(lr=0.0))
    batch = np.array(copy_corpus(rng, 2, 8, 16, 4))
    record = trainer.train_step(batch, np.random.default_rng(0))
    assert math.isfinite(record["loss"])
    for k, p in tiny_model.params.items():
        np.testing.assert_array_equal(p.data, before[k])
    for k, p in dyn.params.items():
        np.testing.assert_array_equal(p.data, ode_before[k])


def test_joint_training_reaches_dynamics(tiny_model, rng):
    dyn = OdeDynamics.initialize(4, 1, rng)
    trainer = LMTrainer(tiny_model, dyn, train_cfg())
    batch = np.array(copy_corpus(rng, 2, 8, 16, 4))
    w_up = dyn.w_up.data.copy()
    record = trainer.train_step(batch, np.random.default_rng(1))
    assert record["ode_grad_norm"] > 0.0
    assert not np.array_equal(dyn.w_up.data, w_up)
    assert 1.0 <= record["t_prime"] <= 2.0
    assert set(record) >= {"step", "loss", "t_prime", "lr", "grad_norm", "seed"}


def test_freeze_model_updates_dynamics_only(tiny_model, rng):
    dyn = OdeDynamics.initialize(4, 1, rng)
    trainer = LMTrainer(tiny_model, dyn, train_cfg(freeze_model=True))
    before = tiny_model.params["lm_head"].data.copy()
    trainer.train_step(np.array(copy_corpus(rng, 2, 8, 16, 4)), np.random.default_rng(1))
    np.testing.assert_array_equal(tiny_model.params["lm_head"].data, before)
    assert set(trainer.trainable) == {f"ode.{n}" for n in dyn.params}


def test_training_is_deterministic(tiny_model_cfg):
    def run():
        model = TinyLM(tiny_model_cfg)
        dyn = OdeDynamics.initialize(4, 1, np.random.default_rng(0))
        trainer = LMTrainer(model, dyn, train_cfg(), seed=11)
        corpus = copy_corpus(np.random.default_rng(1), 8, 8, 16, 4)
        batches, t_rng, pos_rng = (np.random.default_rng(s) for s in (2, 3, 4))
        return [trainer.train_step(sample_batch(batches, corpus, 2, 8), t_rng, pos_rng) for _ in range(3)]

    assert run() == run()


def test_training_reduces_copy_loss(tiny_model_cfg):
    model = TinyLM(tiny_model_cfg)
    trainer = LMTrainer(model, None, train_cfg(scaling="none", t_max=1.0, steps=60, lr=3e-2, sampler_mode="uniform"))
    corpus = copy_corpus(np.random.default_rng(1), 32, 8, 16, 4)
    rng = np.random.default_rng(2)
    losses = [trainer.train_step(sample_batch(rng, corpus, 2, 8), rng)["loss"] for _ in range(60)]
    assert np.mean(losses[-10:]) < np.mean(losses[:10])


def test_non_finite_loss_aborts(tiny_model, rng, mocker):
    trainer = LMTrainer(tiny_model, None, train_cfg(scaling="none", t_max=1.0))
    nan_loss = mocker.MagicMock()
    nan_loss.item.return_value = float("nan")
    mocker.patch.object(tiny_model, "lm_loss", return_value=nan_loss)
    with pytest.raises(TrainingDivergedError) as excinfo:
        trainer.train_step(np.ones((2, 8), dtype=int), rng)
    assert excinfo.value.record["step"] == 0
    nan_loss.backward.assert_not_called()


def test_scaling_schedule_kinds():
    assert scaling_schedule(train_cfg(scaling="pi")).kind is ScalingKind.PI
    assert scaling_schedule(train_cfg(scaling="yarn", yarn_s=4.0)).s == 4.0
    assert scaling_schedule(train_cfg(scaling="none")) is None


def test_t_max_must_cover_l_train(tiny_model):
    with pytest.raises(ValueError):
        LMTrainer(tiny_model, None, train_cfg(scaling="none", t_max=1.0, l_train=16))


# ------------------------------------------------------------ evaluation


def test_ppl_at_native_length_matches_lm_loss(tiny_model, rng):
    corpus = copy_corpus(rng, 4, 8, 16, 4)
    cache = build_schedule_cache(tiny_model.base_basis, [1.0], 8)
    ppl = evaluate_ppl(tiny_model, corpus, 8, cache)
    loss = tiny_model.lm_loss(np.array(corpus), np.arange(1, 9, dtype=float), tiny_model.base_basis).item()
    assert ppl == pytest.approx(math.exp(loss), rel=1e-12)


def test_ppl_on_random_tokens_is_near_vocab(tiny_model, rng):
    corpus = uniform_corpus(rng, 8, 16, 16)
    cache = build_schedule_cache(tiny_model.base_basis, [1.0, 2.0], 8)
    assert evaluate_ppl(tiny_model, corpus, 16, cache) == pytest.approx(16, rel=0.1)


def test_ppl_parallel_matches_serial(tiny_model, rng):
    from ctxlab.utils import WorkerPool

    corpus = uniform_corpus(rng, 6, 16, 16)
    cache = build_schedule_cache(tiny_model.base_basis, [1.0, 2.0], 8)
    with WorkerPool(3) as pool:
        assert evaluate_ppl(tiny_model, corpus, 16, cache, pool) == evaluate_ppl(tiny_model, corpus, 16, cache)


def test_basis_resolver_uses_cache_then_computes(tiny_model, rng):
    dyn = OdeDynamics.initialize(4, 1, rng)
    cfg = train_cfg()
    cache = make_eval_cache(cfg, tiny_model.base_basis, dyn, [1.0, 2.0], 8)
    resolve = basis_resolver(cfg, tiny_model.base_basis, dyn, 8, cache)
    assert resolve(12) is lookup(cache, 12)
    far = resolve(40)
    assert resolve(40) is far
    assert not np.array_equal(far.values, lookup(cache, 16).values)


# ------------------------------------------------------------ checkpoint


def test_checkpoint_round_trip_is_byte_identical(tiny_model, rng, tmp_path):
    dyn = OdeDynamics.initialize(4, 1, rng)
    gen = np.random.default_rng(5)
    gen.random(3)
    ckpt = Checkpoint(tiny_model, dyn, train_cfg(), {"batches": gen.bit_generator.state}, step=7)
    first = ckpt.save(tmp_path / "a.json")
    loaded = Checkpoint.load(first)
    second = loaded.save(tmp_path / "b.json")
    assert first.read_bytes() == second.read_bytes()
    assert loaded.step == 7
    assert loaded.train_config == train_cfg()
    assert loaded.restore_rng("batches").random() == gen.random()
    assert loaded.restore_rng("positions") is None


def test_checkpoint_errors(tmp_path, tiny_model):
    record = Checkpoint(tiny_model).to_record()
    record["version"] = 99
    with pytest.raises(CheckpointError):
        Checkpoint.from_record(record)
    record = Checkpoint(tiny_model).to_record()
    del record["model"]["lm_head"]
    with pytest.raises(CheckpointError):
        Checkpoint.from_record(record)
