"""Token vector sources: static word-vector tables (text format) and a
precomputed contextual-embedding store keyed by (doc_id, token_index).
"""

from __future__ import annotations

import json
import logging

import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingTable:
    """Static word vectors; unknown words get the zero vector (oov=True)."""

    def __init__(self, dim: int, vocab: dict[str, int], matrix: np.ndarray):
        if matrix.shape != (len(vocab), dim):
            raise ValueError("matrix shape does not match vocab/dim")
        self.dim = dim
        self.vocab = vocab
        self.matrix = matrix
        self._zero = np.zeros(dim)

    def lookup(self, word: str) -> tuple[np.ndarray, bool]:
        idx = self.vocab.get(word.lower())
        if idx is None:
            return self._zero, True
        return self.matrix[idx], False


def load_static(path) -> EmbeddingTable:
    """Parse the common 'word v1 ... vd' text distribution format."""
    vocab: dict[str, int] = {}
    rows: list[list[float]] = []
    dim = None
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            word = parts[0].lower()
            values = [float(v) for v in parts[1:]]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise ValueError(f"{path}:{lineno}: no vector values")
            elif len(values) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} values, found {len(values)}")
            if word in vocab:
                duplicates += 1
                logger.warning("%s:%d: duplicate word %r, first occurrence kept",
                               path, lineno, word)
                continue
            vocab[word] = len(rows)
            rows.append(values)
    if dim is None:
        raise ValueError(f"{path}: empty embedding file")
    table = EmbeddingTable(dim, vocab, np.asarray(rows, dtype=np.float64))
    table.duplicates = duplicates
    return table


def lookup(table: EmbeddingTable, word: str) -> tuple[np.ndarray, bool]:
    return table.lookup(word)


class ContextualProvider:
    """Precomputed per-occurrence vectors (stand-in for transformer output)."""

    def __init__(self, dim: int, store: dict[tuple[str, int], np.ndarray]):
        self.dim = dim
        self.store = store

    def get(self, doc_id: str, token_index: int) -> np.ndarray:
        key = (doc_id, token_index)
        if key not in self.store:
            raise KeyError(f"no contextual vector for doc {doc_id!r} token {token_index}")
        return self.store[key]


def load_contextual(path) -> ContextualProvider:
    """JSON Lines records {doc_id, token_index, vector:[...]}."""
    store: dict[tuple[str, int], np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            vec = np.asarray(obj["vector"], dtype=np.float64)
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise ValueError(
                    f"{path}:{lineno}: vector length {vec.shape[0]} != {dim}")
            store[(str(obj["doc_id"]), int(obj["token_index"]))] = vec
    if dim is None:
        raise ValueError(f"{path}: empty contextual store")
    return ContextualProvider(dim, store)
