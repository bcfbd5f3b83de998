"""Relevance explanations for GCN-GRU models on dynamic graphs."""

from ._core import (
    Dataset,
    Error,
    FormatError,
    Graph,
    Model,
    NumericError,
    Relevance,
    ValidationError,
    add_random_edges,
    auc,
    explain,
    fidelity,
    input_gradient,
    load_dataset,
    mae,
    normalize_adjacency,
    predict,
    sparsity,
    stability,
    synth,
    train,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
