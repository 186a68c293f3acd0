"""Attribute-augmented retrieval re-ranking over precomputed embeddings.

The package splits into storage (binary embedding matrices + JSON-lines
manifests), zero-shot attribute augmentation, adapted-query construction via
the dominant singular direction of similarity-weighted candidates,
k-reciprocal re-ranking, mAP@K evaluation, and a CLI that binds them into
reproducible experiments.
"""

from .adapt import (
    AdaptedQuery,
    PowerIterationResult,
    WeightedCandidates,
    adapted_query,
    top_left_singular_vector,
    weight_candidates,
)
from .augment import (
    AttributeVocabulary,
    EmbeddingProvider,
    FixtureProvider,
    SubprocessProvider,
    augment_manifest,
    augment_record,
    candidate_text,
    generate_candidates,
    load_fixture_provider,
    load_vocabulary,
    save_fixture_provider,
    select_best,
)
from .config import KrConfig, RerankConfig, load_config
from .errors import (
    A3RError,
    ConfigError,
    CorruptionError,
    DataError,
    DegenerateInputError,
    DegenerateRowError,
    FormatError,
    ManifestParseError,
    PreconditionError,
    ProviderError,
    ShapeError,
    UndefinedAPError,
    ValidationError,
)
from .evaluation import (
    EvalReport,
    Qrels,
    RankMovement,
    ap_at_k,
    load_qrels,
    mean_ap_at_k,
    qrels_from_labels,
    rank_movement,
    save_qrels,
)
from .fixtures import (
    AugmentFixture,
    RetrievalFixture,
    default_vocabulary,
    make_augment_fixture,
    make_modality_gap_fixture,
    make_separable_fixture,
    write_fixture_set,
)
from .krnn import (
    cosine_distance_matrix,
    expanded_set,
    k_reciprocal_rerank,
    neighbor_table,
    reciprocal_set,
)
from .pipeline import run_batch, run_query
from .similarity import (
    RankedList,
    cosine_scores,
    format_sig9,
    ranking_order,
    read_run,
    similarity_matrix,
    top_k_search,
    write_run,
)
from .store import (
    EmbeddingMatrix,
    Manifest,
    SampleRecord,
    check_aligned,
    l2_normalize,
    load_embeddings,
    load_manifest,
    save_embeddings,
    save_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "A3RError",
    "AdaptedQuery",
    "AttributeVocabulary",
    "AugmentFixture",
    "ConfigError",
    "CorruptionError",
    "DataError",
    "DegenerateInputError",
    "DegenerateRowError",
    "EmbeddingMatrix",
    "EmbeddingProvider",
    "EvalReport",
    "FixtureProvider",
    "FormatError",
    "KrConfig",
    "Manifest",
    "ManifestParseError",
    "PowerIterationResult",
    "PreconditionError",
    "ProviderError",
    "Qrels",
    "RankMovement",
    "RankedList",
    "RerankConfig",
    "RetrievalFixture",
    "SampleRecord",
    "ShapeError",
    "SubprocessProvider",
    "UndefinedAPError",
    "ValidationError",
    "WeightedCandidates",
    "adapted_query",
    "ap_at_k",
    "augment_manifest",
    "augment_record",
    "candidate_text",
    "check_aligned",
    "cosine_distance_matrix",
    "cosine_scores",
    "default_vocabulary",
    "expanded_set",
    "format_sig9",
    "generate_candidates",
    "k_reciprocal_rerank",
    "l2_normalize",
    "load_config",
    "load_embeddings",
    "load_fixture_provider",
    "load_manifest",
    "load_qrels",
    "load_vocabulary",
    "make_augment_fixture",
    "make_modality_gap_fixture",
    "make_separable_fixture",
    "mean_ap_at_k",
    "neighbor_table",
    "qrels_from_labels",
    "rank_movement",
    "ranking_order",
    "read_run",
    "reciprocal_set",
    "run_batch",
    "run_query",
    "save_embeddings",
    "save_fixture_provider",
    "save_manifest",
    "save_qrels",
    "select_best",
    "similarity_matrix",
    "top_k_search",
    "top_left_singular_vector",
    "weight_candidates",
    "write_fixture_set",
    "write_run",
]
