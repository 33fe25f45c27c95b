from .base import BaseConfig

DEFAULT_CONFIG: BaseConfig = {
    "SEED": 0,
    "OUT_DIR": "runs/default",
    "LOG_LEVEL": "INFO",
    "THREADS": 1,
    "CANONICAL_OUTPUT": False,
    "VOCAB_SIZE": 64,
    "N_LAYERS": 2,
    "N_HEADS": 4,
    "HEAD_DIM": 16,
    "FFN_MULT": 4,
    "CONTEXT_LEN": 64,
    # base on the order of the context keeps low frequencies rotating within L
    "ROPE_BASE": 100.0,
    "TRAIN_STEPS": 2000,
    "BATCH_SIZE": 16,
    "LR": 3e-3,
    "WARMUP_STEPS": 100,
    "T_MAX": 4.0,
    "SAMPLER_MODE": "random",
    "INTEGRATOR": "rk4",
    "STEPS_PER_UNIT_T": 4,
    "L_TRAIN": 64,
    "SCALING": "ode",
    "YARN_S": 1.0,
    "ODE_AMP": 1,
    "FREEZE_MODEL": False,
    "GRAD_CLIP": 1.0,
    "CORPUS": "copy",
    "CORPUS_FILE": None,
    "CORPUS_SIZE": 0,  # 0: a fresh synthetic batch every step
    "COPY_BLOCK_LEN": 0,  # 0: random first half, then its copy
    "CHECKPOINT": None,  # defaults to <OUT_DIR>/checkpoint.json
    "CACHE_FILE": None,  # defaults to <OUT_DIR>/basis_cache.json
    "CACHE_T_VALUES": None,  # powers of two up to T_MAX
    "EVAL_LENGTHS": [64, 128, 256],
    "EVAL_CORPUS_SIZE": 16,
    # desk-scale documents: short enough for a 64-token model extended 4x
    "GEN_N_DOCS": 8,
    "GEN_MIN_DOC_LEN": 96,
    "GEN_MAX_DOC_LEN": 192,
    "GEN_FACTS_PER_DOC": 4,
    "GEN_MAX_CHUNKS_PER_DOC": 4,
    "GEN_CHUNK_LEN_MAX": 48,
    "GEN_INSTRUCTIONS_PER_DOC": 4,
    "GEN_TEMPERATURE": 0.7,
    "GEN_NUCLEUS_P": 0.9,
    "GEN_MAX_DECODE_LEN": 4,
    "GEN_NGRAM_N": 3,
    "GEN_NGRAM_MAX_COUNT": 2,
    "GEN_DROP_TIES": True,
    "GEN_ITERATIONS": 1,
    "GEN_LENGTH_FACTOR": 2.0,
    "DATASET": None,  # defaults to <OUT_DIR>/dataset.jsonl
    "PO_BETA": 0.1,
    "PO_LAMBDA": 0.01,
    "PO_OBJECTIVE": "longpo",
    "PO_AGGREGATION": "sum_logprob",
    "PO_STEPS": 500,
    "PO_BATCH_SIZE": 1,
    "PO_LR": 2e-3,
    "PO_GRAD_CLIP": 1.0,
}
