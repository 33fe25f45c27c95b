import numpy as np
import pytest

from ctxlab.datagen import (
    ANSWER,
    EOS,
    FACT,
    QUERY,
    SEP,
    Chunk,
    answer_accuracy,
    answer_from_chunk,
    assemble_multiturn,
    build_preference_dataset,
    fact_sequences,
    gen_instruction,
    gen_quadruple,
    has_repeated_ngram,
    instruction_pool,
    make_docs,
    next_iteration_handoff,
    plant_facts,
    sample_chunks,
    self_evolve,
    template_distribution,
)
from ctxlab.datagen.documents import TEMPLATE_TOKENS
from ctxlab.errors import InvalidArgumentError
from ctxlab.prefopt import PreferenceQuadruple, load_dataset, save_dataset
from ctxlab.utils.validators import GenConfig
from ctxlab.utils.workers import WorkerPool


@pytest.fixture
def gen_cfg():
    return GenConfig(
        min_doc_len=48,
        max_doc_len=64,
        facts_per_doc=3,
        max_chunks_per_doc=2,
        chunk_len_max=16,
        instructions_per_doc=3,
        max_decode_len=3,
    )


def no_rotation(n):
    return None


# =============================================================================
# Documents and chunks
# =============================================================================


def test_plant_facts_places_every_fact(rng):
    doc = plant_facts(rng, 60, 4, vocab_size=16, doc_id=3)
    assert len(doc) == 60 and doc.doc_id == 3
    assert len(doc.facts) == 4
    for fact in doc.facts:
        assert doc.tokens[fact.start:fact.end] == [FACT, *fact.key, *fact.value]
        assert answer_from_chunk(doc.tokens, fact.key) == fact.value
    assert all(t >= 10 for i, t in enumerate(doc.tokens) if not any(f.start <= i < f.end for f in doc.facts))


def test_plant_facts_rejects_tiny_inputs(rng):
    with pytest.raises(InvalidArgumentError):
        plant_facts(rng, 4, 1, vocab_size=16)
    with pytest.raises(InvalidArgumentError):
        plant_facts(rng, 60, 1, vocab_size=12)


def test_make_docs_is_seeded(gen_cfg):
    first = make_docs(np.random.default_rng(5), 4, gen_cfg, 16)
    second = make_docs(np.random.default_rng(5), 4, gen_cfg, 16)
    assert first == second
    assert [d.doc_id for d in first] == [0, 1, 2, 3]
    assert all(gen_cfg.min_doc_len <= len(d) <= gen_cfg.max_doc_len for d in first)


def test_make_docs_parallel_matches_serial(gen_cfg):
    serial = make_docs(np.random.default_rng(5), 6, gen_cfg, 16)
    with WorkerPool(3) as pool:
        parallel = make_docs(np.random.default_rng(5), 6, gen_cfg, 16, pool)
    assert parallel == serial


def test_make_docs_empty_and_negative(gen_cfg, rng):
    assert make_docs(rng, 0, gen_cfg, 16) == []
    with pytest.raises(InvalidArgumentError):
        make_docs(rng, -1, gen_cfg, 16)


def test_sample_chunks_whole_doc_when_chunk_covers_it(rng):
    doc = plant_facts(rng, 20, 2, vocab_size=16)
    cfg = GenConfig(min_doc_len=20, max_doc_len=20, chunk_len_max=32)
    chunks = sample_chunks(rng, doc, cfg)
    assert chunks == [Chunk(start=0, end=20, facts=doc.facts)]


def test_sample_chunks_bounds_and_facts(rng, gen_cfg):
    doc = plant_facts(rng, 64, 3, vocab_size=16)
    chunks = sample_chunks(rng, doc, gen_cfg)
    assert 1 <= len(chunks) <= gen_cfg.max_chunks_per_doc
    for chunk in chunks:
        assert 0 <= chunk.start < chunk.end <= len(doc)
        assert chunk.end - chunk.start <= gen_cfg.chunk_len_max
        assert chunk.facts
        for fact in chunk.facts:
            assert chunk.start <= fact.start and fact.end <= chunk.end


def test_sample_chunks_is_seeded(gen_cfg):
    doc = plant_facts(np.random.default_rng(1), 64, 3, vocab_size=16)
    a = sample_chunks(np.random.default_rng(9), doc, gen_cfg)
    b = sample_chunks(np.random.default_rng(9), doc, gen_cfg)
    assert a == b


# =============================================================================
# Instructions
# =============================================================================


def test_template_distribution():
    probs = template_distribution(0.7, 0.9)
    assert probs.sum() == pytest.approx(1.0)
    assert np.all(np.diff(probs[probs > 0]) <= 0)
    top_only = template_distribution(0.7, 1e-6)
    np.testing.assert_allclose(top_only, [1.0, 0.0, 0.0, 0.0])
    assert np.count_nonzero(template_distribution(2.0, 1.0)) == len(TEMPLATE_TOKENS)
    with pytest.raises(InvalidArgumentError):
        template_distribution(0.0, 0.9)
    with pytest.raises(InvalidArgumentError):
        template_distribution(0.7, 1.5)


def test_single_fact_chunk_pool_targets_that_fact(rng, gen_cfg):
    doc = plant_facts(rng, 30, 1, vocab_size=16)
    chunk = Chunk(start=0, end=30, facts=doc.facts)
    pool = instruction_pool(rng, chunk, gen_cfg)
    assert len(pool) == gen_cfg.instructions_per_doc
    assert {inst.fact for inst in pool} == {doc.facts[0]}


def test_instruction_is_answerable_from_its_chunk(rng, gen_cfg):
    doc = plant_facts(rng, 64, 3, vocab_size=16)
    for chunk in sample_chunks(rng, doc, gen_cfg):
        inst = gen_instruction(rng, chunk, gen_cfg)
        sep, query, template, k1, k2, answer = inst.tokens
        assert (sep, query, answer) == (SEP, QUERY, ANSWER)
        assert template in TEMPLATE_TOKENS
        assert answer_from_chunk(doc.tokens[chunk.start:chunk.end], (k1, k2)) == inst.fact.value
        assert inst.answer == [*inst.fact.value, EOS]


def test_gen_instruction_is_seeded_and_needs_a_fact(gen_cfg):
    doc = plant_facts(np.random.default_rng(2), 64, 3, vocab_size=16)
    chunk = Chunk(start=0, end=64, facts=doc.facts)
    a = gen_instruction(np.random.default_rng(4), chunk, gen_cfg)
    b = gen_instruction(np.random.default_rng(4), chunk, gen_cfg)
    assert a == b
    with pytest.raises(InvalidArgumentError):
        gen_instruction(np.random.default_rng(4), Chunk(start=0, end=5, facts=[]), gen_cfg)


# =============================================================================
# Responses
# =============================================================================


def test_gen_quadruple_contexts_and_identical_conditioning(rng, tiny_model, gen_cfg):
    doc = plant_facts(rng, 24, 2, vocab_size=16)
    chunk = Chunk(start=0, end=24, facts=doc.facts)
    inst = gen_instruction(rng, chunk, gen_cfg)
    quad = gen_quadruple(tiny_model, no_rotation, doc, chunk, inst, gen_cfg)
    assert quad.x_s == quad.x_l == doc.tokens + inst.tokens
    assert quad.y_s == quad.y_l
    assert 1 <= len(quad.y_s) <= gen_cfg.max_decode_len
    again = gen_quadruple(tiny_model, no_rotation, doc, chunk, inst, gen_cfg)
    assert again == quad


def test_gen_quadruple_short_context_is_the_chunk(rng, tiny_model, gen_cfg):
    doc = plant_facts(rng, 64, 3, vocab_size=16)
    chunk = sample_chunks(rng, doc, gen_cfg)[0]
    inst = gen_instruction(rng, chunk, gen_cfg)
    quad = gen_quadruple(tiny_model, no_rotation, doc, chunk, inst, gen_cfg)
    assert quad.x_s == doc.tokens[chunk.start:chunk.end] + inst.tokens
    assert quad.x_l == doc.tokens + inst.tokens


def test_gen_quadruple_flags_truncation(rng, tiny_model, gen_cfg, mocker):
    mocker.patch("ctxlab.datagen.responses.greedy_decode", side_effect=[([11, 12, 13], True), ([11, EOS], False)])
    doc = plant_facts(rng, 24, 1, vocab_size=16)
    chunk = Chunk(start=0, end=24, facts=doc.facts)
    quad = gen_quadruple(tiny_model, no_rotation, doc, chunk, gen_instruction(rng, chunk, gen_cfg), gen_cfg)
    assert quad.truncated
    assert quad.y_s == [11, 12, 13] and quad.y_l == [11, EOS]


def test_gen_quadruple_rejects_chunk_outside_doc(rng, tiny_model, gen_cfg):
    doc = plant_facts(rng, 24, 1, vocab_size=16)
    chunk = Chunk(start=0, end=30, facts=doc.facts)
    with pytest.raises(InvalidArgumentError):
        gen_quadruple(tiny_model, no_rotation, doc, chunk, gen_instruction(rng, chunk, gen_cfg), gen_cfg)


def test_has_repeated_ngram():
    assert has_repeated_ngram([1, 2, 1, 2, 1, 2, 1, 2], 2, 2)
    assert not has_repeated_ngram([1, 2, 1, 2], 2, 2)
    assert not has_repeated_ngram([1], 3, 1)
    with pytest.raises(InvalidArgumentError):
        has_repeated_ngram([1, 2], 0, 1)


def test_answer_accuracy(rng, gen_cfg):
    doc = plant_facts(rng, 30, 1, vocab_size=16)
    inst = gen_instruction(rng, Chunk(start=0, end=30, facts=doc.facts), gen_cfg)
    v1, v2 = inst.fact.value
    assert answer_accuracy([v1, v2, EOS], inst) == 1.0
    assert answer_accuracy([v1], inst) == 0.5
    assert answer_accuracy([], inst) == 0.0


# =============================================================================
# Multi-turn assembly and the pipeline
# =============================================================================


def test_assemble_single_quadruple(rng):
    doc = plant_facts(rng, 20, 2, vocab_size=16)
    inst = [SEP, QUERY, 6, 10, 11, ANSWER]
    quad = PreferenceQuadruple(x_s=doc.tokens[5:12] + inst, x_l=doc.tokens + inst, y_s=[12, EOS], y_l=[13, EOS])
    sample = assemble_multiturn(doc, [quad], [(5, 12)])
    assert len(sample.turns) == 1
    assert sample.quadruple(0) == quad
    assert sample.doc_id == doc.doc_id


def test_assemble_rejects_mixed_documents(rng):
    doc = plant_facts(rng, 20, 2, vocab_size=16)
    other = plant_facts(rng, 20, 2, vocab_size=16, doc_id=1)
    inst = [SEP, QUERY, 6, 10, 11, ANSWER]
    quads = [
        PreferenceQuadruple(x_s=doc.tokens[:8] + inst, x_l=doc.tokens + inst, y_s=[12], y_l=[13]),
        PreferenceQuadruple(x_s=other.tokens[:8] + inst, x_l=other.tokens + inst, y_s=[12], y_l=[13]),
    ]
    with pytest.raises(InvalidArgumentError):
        assemble_multiturn(doc, quads)
    with pytest.raises(InvalidArgumentError):
        assemble_multiturn(doc, [])


def test_next_iteration_handoff():
    cfg = GenConfig(min_doc_len=128, max_doc_len=256)
    nxt = next_iteration_handoff(cfg, "runs/it0/checkpoint.json", 2.0)
    assert nxt.max_doc_len == 512 and nxt.min_doc_len == 256
    assert nxt.model_checkpoint == "runs/it0/checkpoint.json"
    assert cfg.max_doc_len == 256
    with pytest.raises(InvalidArgumentError):
        next_iteration_handoff(cfg, "x", 1.0)


def test_fact_sequences_have_exact_length(rng):
    seqs = fact_sequences(rng, 3, 24, vocab_size=16)
    assert len(seqs) == 3
    for seq in seqs:
        assert len(seq) == 24
        assert seq[-1] == EOS
        k1, k2 = seq[-6], seq[-5]
        assert seq[-9:-7] == [SEP, QUERY] and seq[-4] == ANSWER
        assert answer_from_chunk(seq[:-9], (k1, k2)) == (seq[-3], seq[-2])
    with pytest.raises(InvalidArgumentError):
        fact_sequences(rng, 1, 10, vocab_size=16)


def test_build_preference_dataset(tiny_model, gen_cfg, tmp_path):
    report = build_preference_dataset(tiny_model, no_rotation, gen_cfg, np.random.default_rng(8), 3)
    assert report.samples
    assert report.turns_kept + report.turns_filtered >= len(report.samples)
    assert 0.0 <= report.chosen_accuracy <= 1.0
    summary = report.summary()
    assert summary["samples"] == len(report.samples)
    assert summary["max_doc_len"] <= gen_cfg.max_doc_len

    path = save_dataset(report.samples, tmp_path / "dataset.jsonl")
    assert load_dataset(path) == report.samples


def test_build_preference_dataset_is_deterministic_across_threads(tiny_model, gen_cfg):
    serial = build_preference_dataset(tiny_model, no_rotation, gen_cfg, np.random.default_rng(8), 4)
    with WorkerPool(2) as pool:
        parallel = build_preference_dataset(tiny_model, no_rotation, gen_cfg, np.random.default_rng(8), 4, pool)
    assert parallel.samples == serial.samples
    assert parallel.summary() == serial.summary()


def test_self_evolve_grows_document_length(tiny_model):
    cfg = GenConfig(min_doc_len=64, max_doc_len=64, facts_per_doc=2, chunk_len_max=16,
                    instructions_per_doc=2, max_decode_len=3)
    seen = []

    def model_source(i, iteration_cfg):
        seen.append((i, iteration_cfg.max_doc_len, iteration_cfg.model_checkpoint))
        return tiny_model, no_rotation

    trained_on = []

    def advance(i, report):
        trained_on.append((i, report.max_doc_len))
        return f"ckpt{i + 1}"

    reports = self_evolve(model_source, cfg, np.random.default_rng(0), 2, 3, factor=2.0, advance=advance)
    assert [r.max_doc_len for r in reports] == [64, 128, 256]
    assert seen == [(0, 64, None), (1, 128, "ckpt1"), (2, 256, "ckpt2")]
    assert trained_on == [(0, 64), (1, 128)]


def test_self_evolve_without_advance_keeps_the_starting_model(tiny_model):
    cfg = GenConfig(min_doc_len=32, max_doc_len=32, facts_per_doc=2, chunk_len_max=16,
                    instructions_per_doc=2, max_decode_len=3, model_checkpoint="start.json")
    seen = []

    def model_source(i, iteration_cfg):
        seen.append(iteration_cfg.model_checkpoint)
        return tiny_model, no_rotation

    self_evolve(model_source, cfg, np.random.default_rng(0), 1, 2)
    assert seen == ["start.json", "start.json"]


# =============================================================================
# Short-to-long premise
# =============================================================================


def window_reader(width):
    """A stand-in short-context model: answers only from the last ``width`` context tokens."""

    def decode(model, context, basis_fn, max_new, eos=None):
        key = (context[-3], context[-2])
        value = answer_from_chunk(list(context[-width:]), key)
        if value is None:
            return [EOS], False
        return [*value, EOS], False

    return decode


def test_short_context_answers_beat_long_context_answers(tiny_model, gen_cfg, mocker):
    # the chunk and the instruction always fit the window; the whole document does not
    width = gen_cfg.chunk_len_max + 6
    decode = mocker.patch("ctxlab.datagen.responses.greedy_decode", side_effect=window_reader(width))
    report = build_preference_dataset(tiny_model, no_rotation, gen_cfg, np.random.default_rng(21), 6)
    assert decode.called
    assert report.chosen_accuracy == 1.0
    assert report.chosen_accuracy > report.rejected_accuracy
    for sample in report.samples:
        for turn in sample.turns:
            assert turn.chosen[:-1] == list(answer_from_chunk(sample.c_l, (turn.instruction[3], turn.instruction[4])))


def test_drop_ties_removes_identical_responses(tiny_model, gen_cfg, mocker):
    mocker.patch("ctxlab.datagen.responses.greedy_decode", side_effect=window_reader(1000))
    kept = build_preference_dataset(tiny_model, no_rotation, gen_cfg, np.random.default_rng(21), 3)
    assert kept.turns_tied == 0 and kept.samples

    tie_cfg = gen_cfg.model_copy(update={"drop_ties": True})
    dropped = build_preference_dataset(tiny_model, no_rotation, tie_cfg, np.random.default_rng(21), 3)
    assert dropped.samples == []
    assert dropped.turns_tied == kept.turns_kept
    assert dropped.summary()["turns_tied"] == dropped.turns_tied
