"""Python access to the RACG poisoning testbed core."""

from ._racg import (
    PROMPT_TEMPLATE_VERSION,
    VULN_MARKER,
    Bm25Index,
    ConfigError,
    DataError,
    HashingEmbedder,
    RemoteError,
    confusion_from_counts,
    cosine_similarity,
    crystal_bleu,
    elbow_select_t,
    filter_count,
    kmeans,
    knee_from_wcss,
    load_dataset,
    marker_judge,
    representative_count,
    run_cli,
    select_representatives,
    similarity_bucket,
    tokenize,
)

__all__ = [
    "PROMPT_TEMPLATE_VERSION",
    "VULN_MARKER",
    "Bm25Index",
    "ConfigError",
    "DataError",
    "HashingEmbedder",
    "RemoteError",
    "confusion_from_counts",
    "cosine_similarity",
    "crystal_bleu",
    "elbow_select_t",
    "filter_count",
    "kmeans",
    "knee_from_wcss",
    "load_dataset",
    "marker_judge",
    "representative_count",
    "run_cli",
    "select_representatives",
    "similarity_bucket",
    "tokenize",
]
