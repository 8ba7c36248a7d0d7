"""Token featurization for the sequence labelers.

Dense part: the word vector plus an OOV flag. Sparse part: indicator
features (window word identities within +-2, POS of the token and its
neighbors, 3/4-char affixes, digit/punctuation flags, lexicon-hit
category). The indicator index space is frozen after the training pass;
unseen indicators at inference map to nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import Lexicon, match_terms
from ..embeddings import EmbeddingTable
from ..normalize import NormalizedDoc

BOUNDARY = "<s>"


@dataclass
class TokenFeatures:
    dense: np.ndarray  # word vector + oov flag
    names: tuple[str, ...]  # sparse indicator names


class FeatureRegistry:
    """Indicator name -> column index, offset past the dense block."""

    def __init__(self, dense_dim: int):
        self.dense_dim = dense_dim
        self.index: dict[str, int] = {}
        self.frozen = False

    @property
    def total_dim(self) -> int:
        return self.dense_dim + len(self.index)

    def resolve(self, name: str) -> int | None:
        idx = self.index.get(name)
        if idx is None and not self.frozen:
            idx = len(self.index)
            self.index[name] = idx
        return None if idx is None else self.dense_dim + idx

    def freeze(self) -> None:
        self.frozen = True


def _window(surfaces: list[str], i: int, offset: int) -> str:
    j = i + offset
    if j < 0 or j >= len(surfaces):
        return BOUNDARY
    return surfaces[j]


def featurize(doc: NormalizedDoc, embeddings: EmbeddingTable,
              lexicons: list[Lexicon] | None = None) -> list[TokenFeatures]:
    surfaces = doc.surfaces()
    poss = [t.pos or "X" for t in doc.tokens]

    hit_category = [None] * len(surfaces)
    for lex in lexicons or []:
        for hit in match_terms(doc.normalized_text, lex):
            for k, tok in enumerate(doc.tokens):
                if tok.start >= hit.char_start and tok.end <= hit.char_end:
                    hit_category[k] = hit.category

    out: list[TokenFeatures] = []
    for i, surface in enumerate(surfaces):
        vec, oov = embeddings.lookup(surface)
        dense = np.concatenate([vec, [1.0 if oov else 0.0]])
        names = []
        for off in (-2, -1, 0, 1, 2):
            names.append(f"w[{off}]={_window(surfaces, i, off)}")
        for off in (-1, 0, 1):
            names.append(f"pos[{off}]={_window(poss, i, off)}")
        if len(surface) >= 3:
            names.append(f"pre3={surface[:3]}")
            names.append(f"suf3={surface[-3:]}")
        if len(surface) >= 4:
            names.append(f"pre4={surface[:4]}")
            names.append(f"suf4={surface[-4:]}")
        if any(ch.isdigit() for ch in surface):
            names.append("has_digit")
        if not any(ch.isalnum() for ch in surface):
            names.append("is_punct")
        if hit_category[i] is not None:
            names.append(f"lex={hit_category[i]}")
        out.append(TokenFeatures(dense=dense, names=tuple(names)))
    return out


@dataclass
class SparseDoc:
    """CSR-style per-document feature rows over the unified index space
    (dense dims carry real values, indicators carry 1.0)."""

    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    n_tokens: int


def index_features(features: list[TokenFeatures], registry: FeatureRegistry) -> SparseDoc:
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    for feat in features:
        nz = np.nonzero(feat.dense)[0]
        indices.extend(int(k) for k in nz)
        values.extend(float(feat.dense[k]) for k in nz)
        for name in feat.names:
            col = registry.resolve(name)
            if col is not None:
                indices.append(col)
                values.append(1.0)
        indptr.append(len(indices))
    return SparseDoc(
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        values=np.asarray(values, dtype=np.float64),
        n_tokens=len(features),
    )
