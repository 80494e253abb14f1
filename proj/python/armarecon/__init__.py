"""ARMA rational graph filtering with reconstruction regularization.

Thin python surface over the C++ core: feature extraction from FA/atlas volumes,
subject-graph construction, exact rational-filter oracles, and the full
cross-validation experiment driver.
"""

from ._core import (
    ConfigError,
    DataError,
    FeatureMatrix,
    NumericError,
    SubjectGraph,
    Volume,
    __version__,
    arma_exact_filter,
    arma_fixed_point,
    binary_metrics,
    build_adjacency,
    config_keys,
    cosine_similarity,
    frequency_response,
    load_nifti,
    normalize_adjacency,
    normalized_laplacian,
    read_feature_csv,
    roi_histogram,
    run_experiment,
    stratified_folds,
    subject_features,
    synth_cohort,
    write_feature_csv,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FeatureMatrix",
    "NumericError",
    "SubjectGraph",
    "Volume",
    "__version__",
    "arma_exact_filter",
    "arma_fixed_point",
    "binary_metrics",
    "build_adjacency",
    "config_keys",
    "cosine_similarity",
    "frequency_response",
    "load_nifti",
    "normalize_adjacency",
    "normalized_laplacian",
    "read_feature_csv",
    "roi_histogram",
    "run_experiment",
    "stratified_folds",
    "subject_features",
    "synth_cohort",
    "write_feature_csv",
]
