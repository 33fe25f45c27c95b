from .documents import (
    ANSWER,
    EOS,
    FACT,
    QUERY,
    SEP,
    Chunk,
    Fact,
    SyntheticDoc,
    answer_from_chunk,
    make_docs,
    plant_facts,
    sample_chunks,
)
from .instructions import Instruction, gen_instruction, instruction_pool, template_distribution
from .responses import answer_accuracy, gen_quadruple, has_repeated_ngram
from .pipeline import (
    DatasetReport,
    assemble_multiturn,
    build_preference_dataset,
    fact_sequences,
    next_iteration_handoff,
    self_evolve,
)

__all__ = [
    "ANSWER",
    "EOS",
    "FACT",
    "QUERY",
    "SEP",
    "Chunk",
    "Fact",
    "SyntheticDoc",
    "answer_from_chunk",
    "make_docs",
    "plant_facts",
    "sample_chunks",
    "Instruction",
    "gen_instruction",
    "instruction_pool",
    "template_distribution",
    "answer_accuracy",
    "gen_quadruple",
    "has_repeated_ngram",
    "DatasetReport",
    "assemble_multiturn",
    "build_preference_dataset",
    "fact_sequences",
    "next_iteration_handoff",
    "self_evolve",
]
