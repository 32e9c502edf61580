"""Python bindings for the lying-GCN lab."""

from ._core import (
    ConfigError,
    ContractError,
    Dataset,
    DimensionError,
    Error,
    EvaluationError,
    IoError,
    NumericalError,
    ParseError,
    ValidationError,
    cli,
    eigvals,
    generate_multipartite,
    load_canonical,
    lying_matrix,
    normalize_adjacency,
    random_opinion_weights,
    random_splits,
    save_canonical,
    simulate,
    spearman,
    spectral_check,
    train,
    welch_t_test,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "Dataset",
    "DimensionError",
    "Error",
    "EvaluationError",
    "IoError",
    "NumericalError",
    "ParseError",
    "ValidationError",
    "cli",
    "eigvals",
    "generate_multipartite",
    "load_canonical",
    "lying_matrix",
    "normalize_adjacency",
    "random_opinion_weights",
    "random_splits",
    "save_canonical",
    "simulate",
    "spearman",
    "spectral_check",
    "train",
    "welch_t_test",
]
