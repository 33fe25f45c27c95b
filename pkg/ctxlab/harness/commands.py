"""Subcommand bodies. Each takes a resolved ``Config`` and returns a process exit code."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ..config import Config
from ..datagen import DatasetReport, fact_sequences, self_evolve
from ..errors import CheckpointError, InvalidArgumentError
from ..lm import (
    Checkpoint,
    LMTrainer,
    TinyLM,
    basis_resolver,
    copy_corpus,
    evaluate_ppl,
    load_token_file,
    make_eval_cache,
    sample_batch,
)
from ..ode import OdeDynamics, default_cache_grid, load_cache, lookup_entry, save_cache
from ..prefopt import (
    LMPolicy,
    MultiTurnSample,
    load_dataset,
    mean_reward_margin,
    reference_logprobs,
    save_dataset,
    train_longpo,
)
from ..utils.enum import CorpusKind, ScalingMethod
from ..utils.validators import LongPOConfig, TrainConfig
from ..utils.workers import WorkerPool
from .metrics import MetricsWriter
from .seeds import SeedStreams
from .verify import run_suites

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"


def open_metrics(config: Config, command: str) -> MetricsWriter:
    config.snapshot(config.out_path / "config.json")
    return MetricsWriter(config.out_path / METRICS_FILE, canonical=config.canonical_output, command=command)


def make_corpus(config: Config, rng, length: int, n_seqs: int) -> list[list[int]]:
    kind = CorpusKind(config.corpus)
    if kind is CorpusKind.FILE:
        if not config.corpus_file:
            raise InvalidArgumentError("CORPUS=file needs CORPUS_FILE")
        return load_token_file(config.corpus_file, config.vocab_size)
    if kind is CorpusKind.FACTS:
        return fact_sequences(rng, n_seqs, length, config.vocab_size)
    return copy_corpus(rng, n_seqs, length, config.vocab_size, config.copy_block_len)


def batch_source(config: Config, streams: SeedStreams, train_cfg: TrainConfig) -> Callable[[], np.ndarray]:
    """Training batches: fresh synthetic sequences when CORPUS_SIZE is 0, else windows of a fixed corpus."""
    if config.corpus_size < 0:
        raise InvalidArgumentError(f"CORPUS_SIZE must be non-negative, got {config.corpus_size}")
    batches = streams["batches"]
    if config.corpus_size == 0 and CorpusKind(config.corpus) is not CorpusKind.FILE:
        return lambda: np.array(make_corpus(config, batches, train_cfg.l_train, train_cfg.batch_size))
    corpus = make_corpus(config, streams["corpus"], train_cfg.l_train, max(config.corpus_size, 1))
    return lambda: sample_batch(batches, corpus, train_cfg.batch_size, train_cfg.l_train)


def load_checkpoint(config: Config) -> Checkpoint:
    path = config.artifact("CHECKPOINT", "checkpoint.json")
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path} (run train-lm first)")
    return Checkpoint.load(path)


def _cache_grid(config: Config, t_max: float, max_length: int | None = None):
    if config.cache_t_values:
        return sorted(float(t) for t in config.cache_t_values)
    if max_length is not None:
        t_max = max(t_max, max_length / config.context_len)
    return default_cache_grid(t_max)


def _resolver_for(config: Config, ckpt: Checkpoint, max_length: int):
    train_cfg = ckpt.train_config or config.train_config()
    model = ckpt.model
    cache = make_eval_cache(train_cfg, model.base_basis, ckpt.dynamics,
                            _cache_grid(config, train_cfg.t_max, max_length), model.cfg.context_len)
    return basis_resolver(train_cfg, model.base_basis, ckpt.dynamics, model.cfg.context_len, cache)


# =============================================================================
# verify
# =============================================================================

def cmd_verify(config: Config, suite_filter: str | None = None, hooks: Mapping[str, Any] | None = None) -> int:
    names = [n.strip() for n in suite_filter.split(",")] if suite_filter else None
    results = run_suites(names, hooks)
    with open_metrics(config, "verify") as writer:
        for result in results:
            writer.write(result.to_record())
    width = max(len(r.name) for r in results)
    print(f"{'suite'.ljust(width)}  result  value")
    for r in results:
        print(f"{r.name.ljust(width)}  {'PASS' if r.passed else 'FAIL'}    {r.value:.3e}")
    return 0 if all(r.passed for r in results) else 1


# =============================================================================
# train-lm / cache-basis / eval-extrapolate
# =============================================================================

def cmd_train_lm(config: Config) -> int:
    streams = SeedStreams(config.seed)
    model_cfg = config.model_config()
    train_cfg = config.train_config()

    model = TinyLM(model_cfg)
    dyn = None
    if train_cfg.scaling is ScalingMethod.ODE:
        dyn = OdeDynamics.initialize(model_cfg.head_dim, train_cfg.ode_amp, streams["ode_init"])
    trainer = LMTrainer(model, dyn, train_cfg, seed=config.seed)
    next_batch = batch_source(config, streams, train_cfg)

    logger.info("training %d-parameter model for %d steps (scaling=%s, t_max=%g)",
                model.num_parameters(), train_cfg.steps, train_cfg.scaling.value, train_cfg.t_max)
    with open_metrics(config, "train-lm") as writer:
        for _ in range(train_cfg.steps):
            record = trainer.train_step(next_batch(), streams["t_sample"], streams["positions"])
            writer.write(record)
            if record["step"] % 100 == 0:
                logger.info("step %d loss %.4f t'=%.3f", record["step"], record["loss"], record["t_prime"])

    ckpt = Checkpoint(model, dyn, train_cfg, streams.state(), trainer.step)
    path = ckpt.save(config.artifact("CHECKPOINT", "checkpoint.json"))
    logger.info("checkpoint written to %s", path)
    return 0


def cmd_cache_basis(config: Config) -> int:
    ckpt = load_checkpoint(config)
    train_cfg = ckpt.train_config or config.train_config()
    t_values = _cache_grid(config, train_cfg.t_max)
    cache = make_eval_cache(train_cfg, ckpt.model.base_basis, ckpt.dynamics, t_values, ckpt.model.cfg.context_len)
    path = save_cache(cache, config.artifact("CACHE_FILE", "basis_cache.json"))
    logger.info("cached %d bases (t=%s) in %s", len(cache), t_values, path)
    return 0


def cmd_eval_extrapolate(config: Config) -> int:
    """Perplexity at every EVAL_LENGTHS entry; an existing cache file is read, never rewritten.

    Each length gets its own synthetic corpus, so copy distances scale with
    the length. ``ppl_ratio`` is relative to the shortest length.
    """
    streams = SeedStreams(config.seed)
    ckpt = load_checkpoint(config)
    train_cfg = ckpt.train_config or config.train_config()
    lengths = sorted(int(n) for n in config.eval_lengths)
    if not lengths:
        raise InvalidArgumentError("EVAL_LENGTHS is empty")

    cache_path = config.artifact("CACHE_FILE", "basis_cache.json")
    if cache_path.exists():
        cache = load_cache(cache_path)
    else:
        cache = make_eval_cache(train_cfg, ckpt.model.base_basis, ckpt.dynamics,
                                _cache_grid(config, train_cfg.t_max, lengths[-1]), ckpt.model.cfg.context_len)

    reference = None
    with WorkerPool(config.threads) as pool, open_metrics(config, "eval-extrapolate") as writer:
        for n in lengths:
            t_k, _ = lookup_entry(cache, n)
            corpus = make_corpus(config, streams[f"eval_corpus/{n}"], n, config.eval_corpus_size)
            ppl = evaluate_ppl(ckpt.model, corpus, n, cache, pool)
            reference = reference or ppl
            writer.write({"eval_len": n, "ppl": ppl, "ppl_ratio": ppl / reference, "t_k": t_k, "seed": config.seed})
            logger.info("eval_len=%d t_k=%g ppl=%.4f (x%.2f)", n, t_k, ppl, ppl / reference)
    return 0


# =============================================================================
# gen-prefs / train-longpo
# =============================================================================

def run_longpo(
    config: Config,
    ckpt: Checkpoint,
    samples: Sequence[MultiTurnSample],
    po_cfg: LongPOConfig,
    rng: np.random.Generator,
    on_record: Callable[[dict], None] | None = None,
) -> tuple[Checkpoint, dict]:
    """Preference-optimize a copy of ``ckpt.model`` against the frozen original.

    Returns the tuned checkpoint and a summary holding the dataset-mean reward
    margin before and after training.
    """
    longest = max(len(s.chosen_sequence()) for s in samples)
    basis_fn = _resolver_for(config, ckpt, longest)
    short_ref = LMPolicy(ckpt.model, basis_fn)
    policy = LMPolicy(ckpt.model.copy(), basis_fn)
    refs = reference_logprobs(short_ref, samples, po_cfg.objective)

    initial = mean_reward_margin(policy, samples, refs, po_cfg)
    records = train_longpo(policy, short_ref, samples, po_cfg, rng, seed=config.seed, on_record=on_record)
    final = mean_reward_margin(policy, samples, refs, po_cfg)
    logger.info("mean reward margin %.4f -> %.4f over %d steps", initial, final, len(records))

    tuned = Checkpoint(policy.model, ckpt.dynamics, ckpt.train_config, {"longpo": rng.bit_generator.state},
                       ckpt.step + len(records))
    summary = {"initial_mean_reward_margin": initial, "mean_reward_margin": final,
               "samples": len(samples), "steps": len(records), "seed": config.seed}
    return tuned, summary


def cmd_gen_prefs(config: Config) -> int:
    """Self-evolving generation.

    Iteration ``i`` writes its data with the model it loads from the handed-off
    checkpoint; between iterations that model is LongPO-trained on the data and
    saved as ``checkpoint_iter<i+1>.json`` for the next, longer iteration.
    """
    streams = SeedStreams(config.seed)
    start = config.artifact("CHECKPOINT", "checkpoint.json")
    load_checkpoint(config)
    gen_cfg = config.gen_config().model_copy(update={"model_checkpoint": str(start)})
    po_cfg = config.longpo_config()
    loaded: dict[int, tuple[str, Checkpoint]] = {}

    with WorkerPool(config.threads) as pool, open_metrics(config, "gen-prefs") as writer:

        def model_source(i: int, cfg):
            ckpt = Checkpoint.load(cfg.model_checkpoint)
            loaded[i] = (cfg.model_checkpoint, ckpt)
            longest = cfg.max_doc_len + cfg.chunk_len_max + cfg.max_decode_len + 8
            return ckpt.model, _resolver_for(config, ckpt, longest)

        def advance(i: int, report: DatasetReport) -> str:
            path = config.out_path / f"checkpoint_iter{i + 1}.json"
            _, ckpt = loaded[i]
            if report.samples:
                tuned, summary = run_longpo(config, ckpt, report.samples, po_cfg, streams["longpo"])
            else:
                logger.warning("iteration %d produced no samples; handing the model on unchanged", i)
                tuned, summary = ckpt, {"samples": 0, "steps": 0, "seed": config.seed}
            tuned.save(path)
            writer.write({"trained_on_iteration": i, "checkpoint": path.name, **summary})
            return str(path)

        reports = self_evolve(model_source, gen_cfg, streams["datagen"], config.gen_n_docs,
                              config.gen_iterations, config.gen_length_factor, advance, pool)
        for i, report in enumerate(reports):
            if i == 0:
                path = config.artifact("DATASET", "dataset.jsonl")
            else:
                path = config.out_path / f"dataset_iter{i}.jsonl"
            save_dataset(report.samples, path)
            writer.write({"iteration": i, "dataset": path.name, "model_checkpoint": Path(loaded[i][0]).name,
                          "seed": config.seed, **report.summary()})
            logger.info("iteration %d: %s", i, report.summary())
    return 0


def cmd_train_longpo(config: Config) -> int:
    streams = SeedStreams(config.seed)
    ckpt = load_checkpoint(config)
    po_cfg = config.longpo_config()
    samples = load_dataset(config.artifact("DATASET", "dataset.jsonl"))
    if not samples:
        raise InvalidArgumentError("the preference dataset is empty")

    with open_metrics(config, "train-longpo") as writer:
        tuned, summary = run_longpo(config, ckpt, samples, po_cfg, streams["longpo"], on_record=writer.write)
        writer.write(summary)
    tuned.save(config.out_path / "longpo_checkpoint.json")
    return 0


COMMANDS = {
    "train-lm": cmd_train_lm,
    "cache-basis": cmd_cache_basis,
    "eval-extrapolate": cmd_eval_extrapolate,
    "gen-prefs": cmd_gen_prefs,
    "train-longpo": cmd_train_longpo,
}
