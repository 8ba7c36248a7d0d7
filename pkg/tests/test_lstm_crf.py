import numpy as np
import pytest

from dsae.annotation import BIO_LABELS
from dsae.ner.lstm_crf import (LstmCrfConfig, LstmCrfModel, lstm_crf_decode,
                               lstm_crf_objective, lstm_crf_train, span_f1)
from dsae.numeric.optim import grad_check
from dsae.numeric.rng import Rng


LABELS = BIO_LABELS


def test_init_orthogonal_recurrent_and_forget_bias():
    model = LstmCrfModel.init(input_dim=6, hidden=5, labels=LABELS, seed=0)
    H = 5
    for direction in ("fwd", "bwd"):
        Wh = model.params[f"Wh_{direction}"]
        for gate in range(4):
            block = Wh[:, gate * H:(gate + 1) * H]
            assert np.allclose(block.T @ block, np.eye(H), atol=1e-10)
        b = model.params[f"b_{direction}"]
        assert np.all(b[H:2 * H] == 1.0)
        assert np.all(b[:H] == 0.0) and np.all(b[2 * H:] == 0.0)


def test_init_deterministic_in_seed():
    a = LstmCrfModel.init(4, 3, LABELS, seed=7)
    b = LstmCrfModel.init(4, 3, LABELS, seed=7)
    c = LstmCrfModel.init(4, 3, LABELS, seed=8)
    assert np.array_equal(a.params.data, b.params.data)
    assert not np.array_equal(a.params.data, c.params.data)


def test_objective_gradient_check():
    rng = Rng(0, stream=14)
    for trial in range(3):
        model = LstmCrfModel.init(input_dim=4, hidden=3, labels=LABELS,
                                  seed=trial)
        L = 5
        X = rng.normal((L, 4))
        y = np.array([rng.randint(len(LABELS)) for _ in range(L)], dtype=np.int64)
        objective = lstm_crf_objective(model, X, y)
        x0 = model.params.data + rng.normal((model.params.data.size,), scale=0.05)
        assert grad_check(objective, x0) < 1e-6


def test_decode_deterministic_and_empty():
    model = LstmCrfModel.init(4, 3, LABELS, seed=0)
    X = Rng(1, stream=14).normal((6, 4))
    assert lstm_crf_decode(model, X) == lstm_crf_decode(model, X)
    assert lstm_crf_decode(model, np.zeros((0, 4))) == []


@pytest.fixture(scope="module")
def memorizable():
    # one repeated pattern: feature channel identifies the label directly
    rng = Rng(2, stream=14)
    data = []
    for i in range(12):
        y = ["O", "B-SUPP", "I-SUPP", "O", "B-SYMP"]
        X = np.stack([rng.normal((3,), scale=0.05)
                      + np.eye(5, 3)[[0, 1, 2, 0, 1][t]] * (1 if t < 4 else -1)
                      for t in range(5)])
        data.append((X, y))
    return data


def test_train_memorizes_small_set(memorizable):
    cfg = LstmCrfConfig(hidden=8, epochs=60, batch_size=4, lr=0.02,
                        weight_decay=0.0, seed=0)
    model = lstm_crf_train(memorizable, cfg, dev=memorizable[:4])
    preds = [lstm_crf_decode(model, X) for X, _ in memorizable]
    assert span_f1([y for _, y in memorizable], preds) == 1.0


def test_train_loss_decreases(memorizable):
    X, y = memorizable[0]
    yi = np.array([LABELS.index(lab) for lab in y], dtype=np.int64)
    init = LstmCrfModel.init(X.shape[1], 8, LABELS, seed=0)
    loss_before = lstm_crf_objective(init, X, yi)(init.params.data)[0]
    cfg = LstmCrfConfig(hidden=8, epochs=20, batch_size=4, lr=0.02,
                        weight_decay=0.0, seed=0)
    trained = lstm_crf_train(memorizable, cfg)
    loss_after = lstm_crf_objective(trained, X, yi)(trained.params.data)[0]
    assert loss_after < loss_before


def test_train_nonfinite_loss_names_epoch_and_batch(memorizable):
    bad = [(np.full_like(X, np.nan), y) for X, y in memorizable]
    cfg = LstmCrfConfig(hidden=4, epochs=1, batch_size=4, seed=0)
    with pytest.raises(FloatingPointError, match=r"epoch 0, batch 0"):
        lstm_crf_train(bad, cfg)


def test_train_rejects_empty():
    with pytest.raises(ValueError):
        lstm_crf_train([], LstmCrfConfig())


def test_span_f1_values():
    gold = [["B-SUPP", "I-SUPP", "O"], ["B-SYMP", "O", "O"]]
    assert span_f1(gold, gold) == 1.0
    pred = [["B-SUPP", "I-SUPP", "O"], ["O", "O", "O"]]
    # 1 matched of 1 predicted, 1 of 2 gold -> F1 = 2*1*0.5/1.5
    assert span_f1(gold, pred) == pytest.approx(2 * 1.0 * 0.5 / 1.5)
    assert span_f1([["O"]], [["O"]]) == 0.0
