import numpy as np
import pytest

from dsae.annotation import RELATION_LABELS, RelationInstance
from dsae.embeddings import EmbeddingTable
from dsae.numeric.optim import grad_check
from dsae.numeric.rng import Rng
from dsae.relation import (CnnReConfig, CnnReModel, class_weights, classify_pairs,
                           cnn_forward, cnn_loss_and_grad, cnn_objective, cnn_train,
                           encode_instance)

from util import make_doc, span


@pytest.fixture(scope="module")
def emb():
    words = [f"w{i}" for i in range(30)] + ["vitamin", "c", "nausea", "sleep"]
    vocab = {w: i for i, w in enumerate(words)}
    return EmbeddingTable(6, vocab, Rng(0, stream=16).normal((len(words), 6)))


def instance(doc, hs, he, ts, te, label="NoRelation", tail_type="Symptom"):
    head = span(doc, "T1", "Supplement", hs, he)
    tail = span(doc, "T2", tail_type, ts, te)
    return RelationInstance(doc.doc_id, head, tail, label)


# --------------------------------------------------------------- encoding

def test_encode_markers_wrap_entities(emb):
    doc = make_doc("d", ["w0", "vitamin", "c", "w1", "nausea", "w2"])
    enc = encode_instance(instance(doc, 1, 3, 4, 5), doc, emb, max_len=16)
    # 6 tokens + 4 markers
    assert enc.tokens.shape == (10, 7)
    assert list(enc.marker_ids) == [-1, 0, -1, -1, 1, -1, 2, -1, 3, -1]
    # marker rows carry zero token vectors (filled from the model later)
    assert np.all(enc.tokens[enc.marker_ids >= 0] == 0.0)
    # oov flag set only for unknown words
    doc2 = make_doc("d2", ["qqq", "vitamin"])
    enc2 = encode_instance(instance(doc2, 1, 2, 0, 1), doc2, emb, max_len=16)
    real = enc2.marker_ids < 0
    assert list(enc2.tokens[real, -1]) == [1.0, 0.0]


def test_encode_relative_positions(emb):
    doc = make_doc("d", ["w0", "vitamin", "c", "w1", "nausea", "w2"])
    m = 16
    enc = encode_instance(instance(doc, 1, 3, 4, 5), doc, emb, max_len=m)
    # markers take the pre-marker token's index, so <h> shares position with
    # the entity start
    real_or_marker_idx = [0, 1, 1, 2, 2, 3, 4, 4, 4, 5]
    expected_head = []
    expected_tail = []
    for idx in real_or_marker_idx:
        h = 0 if 1 <= idx < 3 else (idx - 1 if idx < 1 else idx - 2)
        t = 0 if idx == 4 else (idx - 4)
        expected_head.append(max(-m, min(m, h)) + m)
        expected_tail.append(max(-m, min(m, t)) + m)
    assert list(enc.pos_head) == expected_head
    assert list(enc.pos_tail) == expected_tail


def test_encode_position_clamping(emb):
    words = ["vitamin"] + [f"w{i % 30}" for i in range(20)] + ["nausea"]
    doc = make_doc("d", words)
    enc = encode_instance(instance(doc, 0, 1, 21, 22), doc, emb, max_len=8)
    # the kept window holds the head; the tail sits >max_len away, so every
    # tail-relative offset saturates at the lower clamp (-8 shifted to 0)
    assert enc.pos_head.min() == 8 and enc.pos_head.max() <= 16
    assert np.all(enc.pos_tail == 0)


def test_encode_truncation_centered_and_keeps_entities(emb):
    words = [f"w{i % 30}" for i in range(100)]
    words[40], words[50] = "vitamin", "nausea"
    doc = make_doc("d", words)
    enc = encode_instance(instance(doc, 40, 41, 50, 51), doc, emb, max_len=24)
    assert enc.tokens.shape[0] == 24  # budget 20 tokens + 4 markers
    assert sorted(enc.marker_ids[enc.marker_ids >= 0]) == [0, 1, 2, 3]
    # both entities survive truncation: shifted offset 24 means "inside span"
    assert np.any(enc.pos_head == 24) and np.any(enc.pos_tail == 24)


def test_encode_rejects_out_of_range(emb):
    # spans built against a longer doc, encoded against a shorter one
    long_doc = make_doc("d", ["vitamin", "w0", "w1", "nausea"])
    short_doc = make_doc("d", ["vitamin", "w0"])
    inst = instance(long_doc, 0, 1, 3, 4)
    with pytest.raises(ValueError, match="outside"):
        encode_instance(inst, short_doc, emb, max_len=16)


# --------------------------------------------------------------- forward

def test_zero_weights_give_uniform_probs(emb):
    doc = make_doc("d", ["vitamin", "c", "w1", "nausea"])
    enc = encode_instance(instance(doc, 0, 2, 3, 4), doc, emb, max_len=16)
    cfg = CnnReConfig(max_len=16, seed=0)
    model = CnnReModel.init(emb.dim + 1, cfg)
    model.params.data[:] = 0.0
    probs, _ = cnn_forward(model, enc)
    assert np.allclose(probs, 1.0 / 3.0, atol=0)


def test_dropout_requires_rng(emb):
    doc = make_doc("d", ["vitamin", "nausea"])
    enc = encode_instance(instance(doc, 0, 1, 1, 2, label="Indication"),
                          doc, emb, max_len=16)
    model = CnnReModel.init(emb.dim + 1, CnnReConfig(max_len=16))
    with pytest.raises(ValueError, match="Rng"):
        cnn_loss_and_grad(model, enc, 1.0, None, train_mode=True)


def test_cnn_gradient_check(emb):
    doc = make_doc("d", ["vitamin", "c", "w1", "nausea", "w2"])
    enc = encode_instance(instance(doc, 0, 2, 3, 4, label="AdverseEvent"),
                          doc, emb, max_len=12)
    model = CnnReModel.init(emb.dim + 1, CnnReConfig(max_len=12, seed=3))
    objective = cnn_objective(model, enc, weight=1.3)
    x0 = model.params.data.copy()
    # eps kept small so the finite-difference sweep stays clear of the
    # ReLU/argmax kinks
    assert grad_check(objective, x0, eps=1e-6) < 1e-4


# --------------------------------------------------------------- weights

def test_class_weights_inverse_frequency():
    w = class_weights([0, 0, 0, 1, 1, 2])
    total, present = 6, 3
    assert np.allclose(w, [total / (present * 3), total / (present * 2),
                           total / (present * 1)])
    assert np.allclose(class_weights([0, 1, 2]), 1.0)


def test_class_weights_missing_label_warns(caplog):
    with caplog.at_level("WARNING"):
        w = class_weights([0, 0, 1])
    assert w[2] == 1.0
    assert any("AdverseEvent" in r.message for r in caplog.records)


# --------------------------------------------------------------- training

def test_cnn_train_and_classify_pairs(emb):
    rng = Rng(5, stream=16)
    train = []
    doc_specs = []
    for i in range(30):
        # "vitamin <filler> nausea" -> AdverseEvent; with "sleep" -> Indication
        tail_word = "nausea" if i % 2 == 0 else "sleep"
        label = "AdverseEvent" if i % 2 == 0 else "Indication"
        words = ["vitamin", f"w{rng.randint(30)}", tail_word]
        doc = make_doc(f"d{i}", words)
        train.append(encode_instance(instance(doc, 0, 1, 2, 3, label=label),
                                     doc, emb, max_len=16))
        doc_specs.append((doc, label))
    cfg = CnnReConfig(max_len=16, epochs=12, batch_size=8, lr=1e-3,
                      dropout=0.0, seed=0)
    model = cnn_train(train, cfg)
    doc, expected = doc_specs[0]
    entities = [span(doc, "T1", "Supplement", 0, 1),
                span(doc, "T2", "Symptom", 2, 3)]
    preds = classify_pairs(doc, entities, model, emb)
    assert len(preds) == 1 and preds[0].label == expected
    assert preds[0].head.id == "T1" and preds[0].tail.id == "T2"


def test_classify_pairs_zero_model_drops_all(emb):
    # all-zero weights -> uniform probs -> tie resolves to NoRelation -> dropped
    doc = make_doc("d", ["vitamin", "nausea"])
    model = CnnReModel.init(emb.dim + 1, CnnReConfig(max_len=16))
    model.params.data[:] = 0.0
    entities = [span(doc, "T1", "Supplement", 0, 1),
                span(doc, "T2", "Symptom", 1, 2)]
    assert classify_pairs(doc, entities, model, emb) == []


def test_classify_pairs_only_supplement_event_pairs(emb):
    doc = make_doc("d", ["vitamin", "c", "nausea"])
    model = CnnReModel.init(emb.dim + 1, CnnReConfig(max_len=16))
    entities = [span(doc, "T1", "Symptom", 2, 3),
                span(doc, "T2", "Symptom", 0, 1)]
    # no supplement head -> no candidate pairs at all
    assert classify_pairs(doc, entities, model, emb) == []


def test_cnn_train_rejects_empty():
    with pytest.raises(ValueError):
        cnn_train([])


def test_relation_label_order():
    assert RELATION_LABELS == ("NoRelation", "Indication", "AdverseEvent")
