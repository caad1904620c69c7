"""Ranking of related basic questions and robustness scoring for QA models.

The package covers the full pipeline: binary embedding storage, a GRU
sentence encoder, a coordinate-descent LASSO solver used to express a main
question as a sparse combination of candidate questions, classic sentence
similarity metrics as ranking baselines, top-k ranking with partitions,
answer-file accuracy plus a robustness measure, and threshold-gated
selection of how many ranked questions to append. The ``bqrank`` CLI wires
these together with reproducible run manifests.
"""

__version__ = "0.1.0"

from .embeddings import (
    DuplicateIdError,
    EmbeddingMatrix,
    IdCountError,
    MalformedHeaderError,
    NonFiniteValueError,
    PayloadSizeError,
    QueryEmbedding,
    column,
    load_matrix,
    load_queries,
    write_matrix,
    write_queries,
)
from .errors import FileFormatError
from .gru import GruWeights, WordTable, encode, encode_text, gru_step, load_gru_weights, write_gru_weights
from .lasso import LassoConfig, SparseSolution, kkt_residual, objective, soft_threshold, solve
from .metrics import (
    METRIC_NAMES,
    CiderCorpusStats,
    bleu_n,
    cider,
    lcs_length,
    load_cider_stats,
    load_synonym_table,
    meteor,
    rouge_l,
    save_cider_stats,
    tokenize,
)
from .ranking import (
    Candidate,
    Partition,
    Question,
    RankedEntry,
    RankedRecord,
    concat_question,
    load_pool_file,
    load_question_file,
    partition,
    preprocess_pool,
    rank_from_scores,
    rank_lasso,
    rank_metric,
    read_ranked_records,
    write_ranked_records,
)
from .robustness import (
    CATEGORIES,
    AccuracyReport,
    AnswerRecord,
    RobustnessReport,
    accuracy_difference,
    dataset_accuracy,
    evaluate_robustness,
    load_answer_records,
    normalize_answer,
    record_accuracy,
    robustness_score,
)
from .selection import (
    SelectionResult,
    SelectionThresholds,
    apply_selection,
    select,
    selection_histogram,
)

__all__ = [name for name in dir() if not name.startswith("_")]
