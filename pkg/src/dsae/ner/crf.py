"""Linear-chain CRF over BIO labels, trained with L-BFGS + elastic net.

Unary scores are linear in the token features; the transition matrix is
shared across positions. The partition function and marginals come from
log-domain forward-backward; decoding is Viterbi with ties broken toward
the lowest label index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..annotation import BIO_LABELS
from ..numeric import kernels
from ..numeric.optim import LbfgsConfig, lbfgs_minimize
from .features import FeatureRegistry, SparseDoc, TokenFeatures, index_features


def viterbi(unary: np.ndarray, transitions: np.ndarray) -> tuple[list[int], float]:
    """Best-scoring label path; empty input decodes to an empty path."""
    unary = np.ascontiguousarray(unary, dtype=np.float64)
    if unary.shape[0] == 0:
        return [], 0.0
    path, score = kernels.viterbi_kernel(unary, np.ascontiguousarray(transitions, dtype=np.float64))
    return [int(i) for i in path], float(score)


@dataclass
class CrfConfig:
    c1: float = 0.1
    c2: float = 0.1
    max_iter: int = 200
    tol: float = 1e-5
    memory: int = 10


@dataclass
class CrfModel:
    labels: tuple[str, ...]
    registry: FeatureRegistry
    W: np.ndarray  # labels x feature dims
    T: np.ndarray  # labels x labels
    converged: bool = True
    hyperparameters: dict = field(default_factory=dict)

    def unary(self, doc: SparseDoc) -> np.ndarray:
        return kernels.unary_scores(self.W, doc.indptr, doc.indices, doc.values)

    def decode(self, features: list[TokenFeatures]) -> list[str]:
        if not features:
            return []
        sparse = index_features(features, self.registry)
        path, _ = viterbi(self.unary(sparse), self.T)
        return [self.labels[i] for i in path]


def _doc_nll_grad(W, T, doc: SparseDoc, labels: np.ndarray,
                  gradW: np.ndarray | None = None, gradT: np.ndarray | None = None):
    """NLL = logZ - score(gold); gradient = expected - empirical counts."""
    K = W.shape[0]
    unary = kernels.unary_scores(W, doc.indptr, doc.indices, doc.values)
    L = unary.shape[0]
    alpha, logz = kernels.crf_forward(unary, T)
    gold = float(unary[np.arange(L), labels].sum())
    if L > 1:
        gold += float(T[labels[:-1], labels[1:]].sum())
    value = logz - gold
    if gradW is None:
        return value

    beta = kernels.crf_backward(unary, T)
    marg = np.exp(alpha + beta - logz)  # L x K, rows sum to 1
    coeff = marg.copy()
    coeff[np.arange(L), labels] -= 1.0
    kernels.unary_grad(gradW, doc.indptr, doc.indices, doc.values, coeff)
    if L > 1:
        # pairwise marginals: alpha[t-1,i] + T[i,j] + unary[t,j] + beta[t,j]
        pair = (alpha[:-1, :, None] + T[None, :, :]
                + (unary[1:] + beta[1:])[:, None, :])
        gradT += np.exp(pair - logz).sum(axis=0)
        np.subtract.at(gradT, (labels[:-1], labels[1:]), 1.0)
    return value


def crf_neg_log_likelihood(model: CrfModel, features: list[TokenFeatures],
                           gold_labels: list[str]) -> tuple[float, np.ndarray]:
    """Value and flat gradient (over W then T) for one instance."""
    if len(features) != len(gold_labels) or not features:
        raise ValueError("need equally many features and labels, at least one")
    doc = index_features(features, model.registry)
    y = np.asarray([model.labels.index(lab) for lab in gold_labels], dtype=np.int64)
    gradW = np.zeros_like(model.W)
    gradT = np.zeros_like(model.T)
    value = _doc_nll_grad(model.W, model.T, doc, y, gradW, gradT)
    return value, np.concatenate([gradW.ravel(), gradT.ravel()])


def crf_train(train_docs, config: CrfConfig | None = None,
              labels: tuple[str, ...] = BIO_LABELS) -> CrfModel:
    """train_docs: list of (features, gold label strings) pairs."""
    cfg = config or CrfConfig()
    if not train_docs:
        raise ValueError("empty training set")
    dense_dim = train_docs[0][0][0].dense.shape[0] if train_docs[0][0] else 0
    registry = FeatureRegistry(dense_dim)
    packed = []
    for features, gold in train_docs:
        if not features:
            continue
        sparse = index_features(features, registry)
        y = np.asarray([labels.index(lab) for lab in gold], dtype=np.int64)
        packed.append((sparse, y))
    registry.freeze()

    K = len(labels)
    F = registry.total_dim
    nW = K * F

    def objective(x: np.ndarray) -> tuple[float, np.ndarray]:
        W = x[:nW].reshape(K, F)
        T = x[nW:].reshape(K, K)
        gradW = np.zeros_like(W)
        gradT = np.zeros_like(T)
        total = 0.0
        for sparse, y in packed:
            total += _doc_nll_grad(W, T, sparse, y, gradW, gradT)
        return total, np.concatenate([gradW.ravel(), gradT.ravel()])

    result = lbfgs_minimize(
        objective, np.zeros(nW + K * K),
        LbfgsConfig(memory=cfg.memory, max_iter=cfg.max_iter, tol=cfg.tol,
                    c1=cfg.c1, c2=cfg.c2))
    W = result.x[:nW].reshape(K, F)
    T = result.x[nW:].reshape(K, K)
    return CrfModel(
        labels=tuple(labels), registry=registry, W=W, T=T,
        converged=result.converged,
        hyperparameters={"c1": cfg.c1, "c2": cfg.c2, "max_iter": cfg.max_iter,
                         "tol": cfg.tol, "memory": cfg.memory},
    )
