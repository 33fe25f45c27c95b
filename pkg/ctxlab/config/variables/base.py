from typing import Union
from typing_extensions import TypedDict


class BaseConfig(TypedDict):
    SEED: int
    OUT_DIR: str
    LOG_LEVEL: str
    THREADS: int
    CANONICAL_OUTPUT: bool
    # model
    VOCAB_SIZE: int
    N_LAYERS: int
    N_HEADS: int
    HEAD_DIM: int
    FFN_MULT: int
    CONTEXT_LEN: int
    ROPE_BASE: float
    # language-model training
    TRAIN_STEPS: int
    BATCH_SIZE: int
    LR: float
    WARMUP_STEPS: int
    T_MAX: float
    SAMPLER_MODE: str
    INTEGRATOR: str
    STEPS_PER_UNIT_T: int
    L_TRAIN: int
    SCALING: str
    YARN_S: float
    ODE_AMP: int
    FREEZE_MODEL: bool
    GRAD_CLIP: float
    CORPUS: str
    CORPUS_FILE: Union[str, None]
    CORPUS_SIZE: int
    COPY_BLOCK_LEN: int
    # artifacts and evaluation
    CHECKPOINT: Union[str, None]
    CACHE_FILE: Union[str, None]
    CACHE_T_VALUES: Union[list, None]
    EVAL_LENGTHS: list
    EVAL_CORPUS_SIZE: int
    # preference data
    GEN_N_DOCS: int
    GEN_MIN_DOC_LEN: int
    GEN_MAX_DOC_LEN: int
    GEN_FACTS_PER_DOC: int
    GEN_MAX_CHUNKS_PER_DOC: int
    GEN_CHUNK_LEN_MAX: int
    GEN_INSTRUCTIONS_PER_DOC: int
    GEN_TEMPERATURE: float
    GEN_NUCLEUS_P: float
    GEN_MAX_DECODE_LEN: int
    GEN_NGRAM_N: int
    GEN_NGRAM_MAX_COUNT: int
    GEN_DROP_TIES: bool
    GEN_ITERATIONS: int
    GEN_LENGTH_FACTOR: float
    # preference optimization
    DATASET: Union[str, None]
    PO_BETA: float
    PO_LAMBDA: float
    PO_OBJECTIVE: str
    PO_AGGREGATION: str
    PO_STEPS: int
    PO_BATCH_SIZE: int
    PO_LR: float
    PO_GRAD_CLIP: float
