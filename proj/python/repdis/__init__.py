"""Embedding-space style/content disentanglement core."""

from ._repdis import (
    DegenerateVectorError,
    DimensionError,
    EmptyDatasetError,
    Error,
    FormatError,
    InvalidArgumentError,
    IoError,
    NumericalError,
    UnknownDomainError,
    __version__,
    cosine_similarity,
    decode_embeddings,
    encode_embeddings,
    mean_embedding,
    read_embeddings,
    run_cli,
    simulate,
    translate,
    write_embeddings,
)

__all__ = [
    "DegenerateVectorError",
    "DimensionError",
    "EmptyDatasetError",
    "Error",
    "FormatError",
    "InvalidArgumentError",
    "IoError",
    "NumericalError",
    "UnknownDomainError",
    "__version__",
    "cosine_similarity",
    "decode_embeddings",
    "encode_embeddings",
    "mean_embedding",
    "read_embeddings",
    "run_cli",
    "simulate",
    "translate",
    "write_embeddings",
]
