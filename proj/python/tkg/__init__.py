"""Temporal knowledge graph evolution and question answering."""

import json
from pathlib import Path

from ._tkg import (
    ConfigError,
    Engine,
    Graph,
    NoAnswerError,
    OracleFormatError,
    ParseError,
    PreconditionError,
    TkgError,
    TransportError,
    ValidationError,
    __version__,
    candidate_confidence,
    cosine,
    encode,
    generate_world,
)


def read_jsonl(path):
    """Records of a JSONL file (corpus or dataset) as a list of dicts."""
    with Path(path).open(encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


__all__ = [
    "ConfigError",
    "Engine",
    "Graph",
    "NoAnswerError",
    "OracleFormatError",
    "ParseError",
    "PreconditionError",
    "TkgError",
    "TransportError",
    "ValidationError",
    "__version__",
    "candidate_confidence",
    "cosine",
    "encode",
    "generate_world",
    "read_jsonl",
]
