"""Linear SVM token-classification baseline: one-vs-rest hinge loss with
L2 regularization, trained by seeded SGD. Prediction is the argmax margin,
ties toward the lowest label index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..annotation import BIO_LABELS
from ..numeric.rng import Rng
from .features import FeatureRegistry, TokenFeatures, index_features


@dataclass
class SvmModel:
    labels: tuple[str, ...]
    registry: FeatureRegistry
    W: np.ndarray  # labels x feature dims
    b: np.ndarray  # labels
    hyperparameters: dict = field(default_factory=dict)

    def margins(self, indices: np.ndarray, values: np.ndarray) -> np.ndarray:
        return self.W[:, indices] @ values + self.b

    def decode(self, features: list[TokenFeatures]) -> list[str]:
        return svm_predict(self, features)


def _token_rows(sparse):
    for t in range(sparse.n_tokens):
        lo, hi = sparse.indptr[t], sparse.indptr[t + 1]
        yield sparse.indices[lo:hi], sparse.values[lo:hi]


def svm_train(train_docs, epochs: int = 5, lr: float = 0.1, l2: float = 1e-4,
              seed: int = 0, labels: tuple[str, ...] = BIO_LABELS) -> SvmModel:
    """train_docs: list of (features, gold label strings) pairs."""
    if not train_docs:
        raise ValueError("empty training set")
    dense_dim = train_docs[0][0][0].dense.shape[0] if train_docs[0][0] else 0
    registry = FeatureRegistry(dense_dim)
    instances: list[tuple[np.ndarray, np.ndarray, int]] = []
    for features, gold in train_docs:
        sparse = index_features(features, registry)
        for (idx, val), lab in zip(_token_rows(sparse), gold):
            instances.append((idx, val, labels.index(lab)))
    registry.freeze()

    K = len(labels)
    W = np.zeros((K, registry.total_dim))
    b = np.zeros(K)
    rng = Rng(seed, stream=11)
    n = len(instances)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for pos in order:
            idx, val, y = instances[pos]
            m = W[:, idx] @ val + b
            shrink = 1.0 - lr * l2
            W *= shrink
            for k in range(K):
                sign = 1.0 if k == y else -1.0
                if sign * m[k] < 1.0:
                    W[k, idx] += lr * sign * val
                    b[k] += lr * sign
    return SvmModel(labels=tuple(labels), registry=registry, W=W, b=b,
                    hyperparameters={"epochs": epochs, "lr": lr, "l2": l2, "seed": seed})


def svm_predict(model: SvmModel, features: list[TokenFeatures]) -> list[str]:
    if not features:
        return []
    sparse = index_features(features, model.registry)
    out = []
    for idx, val in _token_rows(sparse):
        m = model.margins(idx, val)
        out.append(model.labels[int(np.argmax(m))])  # first max = lowest index
    return out
