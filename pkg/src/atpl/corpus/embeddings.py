"""GloVe-style text embeddings (``token v_1 ... v_d`` per line)."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import IngestionError
from .vocab import Vocabulary

log = logging.getLogger(__name__)


@dataclass
class EmbeddingTable:
    matrix: np.ndarray  # d × V
    source: str  # "file" or "random"


def load_embeddings(path, vocab: Vocabulary, d: int,
                    rng: np.random.Generator, scale: float = 0.1) -> EmbeddingTable:
    """Columns for in-vocabulary tokens come from the file and are
    mean-centred per dimension; the rest are drawn uniformly in
    ``[-scale, scale]``."""
    found: dict[int, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            if not line.strip():
                continue
            if len(parts) < 2:
                raise IngestionError(f"{path}: malformed embedding on line {lineno}")
            try:
                values = np.array([float(x) for x in parts[1:]])
            except ValueError:
                raise IngestionError(f"{path}: non-numeric value on line {lineno}") from None
            if values.shape[0] != d:
                raise IngestionError(
                    f"{path}: line {lineno} has dimension {values.shape[0]}, config says {d}")
            idx = vocab.index.get(parts[0])
            if idx is not None:
                found[idx] = values
    matrix = rng.uniform(-scale, scale, size=(d, len(vocab)))
    if not found:
        log.warning("no vocabulary overlap with %s; embeddings are random", path)
        return EmbeddingTable(matrix, "random")
    ids = sorted(found)
    loaded = np.stack([found[i] for i in ids], axis=1)
    loaded -= loaded.mean(axis=1, keepdims=True)
    matrix[:, ids] = loaded
    return EmbeddingTable(matrix, "file")
