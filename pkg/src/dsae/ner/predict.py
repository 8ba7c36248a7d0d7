"""Composition of featurization, decoding, and BIO-to-span conversion."""

from __future__ import annotations

import numpy as np

from ..annotation import EntitySpan, from_bio
from ..corpus import Lexicon
from ..embeddings import ContextualProvider, EmbeddingTable
from ..normalize import NormalizedDoc
from .crf import CrfModel
from .features import featurize
from .lstm_crf import LstmCrfModel, lstm_crf_decode
from .svm import SvmModel, svm_predict


def doc_matrix(doc: NormalizedDoc, embeddings: EmbeddingTable) -> np.ndarray:
    """Dense per-token input: word vector plus OOV flag."""
    rows = []
    for tok in doc.tokens:
        vec, oov = embeddings.lookup(tok.surface)
        rows.append(np.concatenate([vec, [1.0 if oov else 0.0]]))
    if not rows:
        return np.zeros((0, embeddings.dim + 1))
    return np.stack(rows)


def doc_matrix_contextual(doc: NormalizedDoc, provider: ContextualProvider) -> np.ndarray:
    rows = [provider.get(doc.doc_id, i) for i in range(len(doc.tokens))]
    if not rows:
        return np.zeros((0, provider.dim))
    return np.stack(rows)


def decode_labels(model, doc: NormalizedDoc, embeddings: EmbeddingTable,
                  lexicons: list[Lexicon] | None = None) -> list[str]:
    if isinstance(model, LstmCrfModel):
        return lstm_crf_decode(model, doc_matrix(doc, embeddings))
    features = featurize(doc, embeddings, lexicons)
    if isinstance(model, SvmModel):
        return svm_predict(model, features)
    if isinstance(model, CrfModel):
        return model.decode(features)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def predict_entities(model, doc: NormalizedDoc, embeddings: EmbeddingTable,
                     lexicons: list[Lexicon] | None = None) -> list[EntitySpan]:
    labels = decode_labels(model, doc, embeddings, lexicons)
    return from_bio(doc, labels)
