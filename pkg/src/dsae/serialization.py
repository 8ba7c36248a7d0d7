"""JSON model bundles.

Every trained model saves to a single JSON document with the keys
{model_type, version, label_alphabet, feature_registry, hyperparameters,
weights}. Floats are written with Python's shortest-repr decimal encoding,
so float64 values round-trip exactly and identical models serialize to
byte-identical files.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .ner.crf import CrfModel
from .ner.features import FeatureRegistry
from .ner.lstm_crf import LstmCrfModel, _param_shapes
from .ner.svm import SvmModel
from .numeric.params import ParamVector
from .relation import CnnReModel, _cnn_shapes

BUNDLE_VERSION = 1


def _encode_registry(registry: FeatureRegistry | None):
    if registry is None:
        return None
    return {"dense_dim": registry.dense_dim, "index": dict(registry.index)}


def _decode_registry(blob) -> FeatureRegistry | None:
    if blob is None:
        return None
    registry = FeatureRegistry(int(blob["dense_dim"]))
    registry.index = {name: int(idx) for name, idx in blob["index"].items()}
    registry.freeze()
    return registry


def _array(blob) -> np.ndarray:
    return np.asarray(blob, dtype=np.float64)


def model_to_bundle(model) -> dict:
    """Build the JSON-serializable bundle dict for any supported model."""
    if isinstance(model, CrfModel):
        model_type = "crf"
        registry = model.registry
        weights = {"W": model.W.tolist(), "T": model.T.tolist()}
    elif isinstance(model, SvmModel):
        model_type = "svm"
        registry = model.registry
        weights = {"W": model.W.tolist(), "b": model.b.tolist()}
    elif isinstance(model, LstmCrfModel):
        model_type = "lstm_crf"
        registry = None
        weights = {name: model.params[name].tolist() for name in model.params.shapes}
    elif isinstance(model, CnnReModel):
        model_type = "cnn_re"
        registry = None
        weights = {name: model.params[name].tolist() for name in model.params.shapes}
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")

    hyper = dict(model.hyperparameters)
    if isinstance(model, LstmCrfModel):
        hyper["input_dim"] = model.input_dim
        hyper["hidden"] = model.hidden
    if isinstance(model, CnnReModel):
        hyper["input_dim"] = model.input_dim
        hyper["max_len"] = model.max_len
        hyper["dropout"] = model.dropout
        hyper["use_positions"] = model.use_positions
        hyper["use_markers"] = model.use_markers
    return {
        "model_type": model_type,
        "version": BUNDLE_VERSION,
        "label_alphabet": list(model.labels),
        "feature_registry": _encode_registry(registry),
        "hyperparameters": hyper,
        "weights": weights,
    }


def model_from_bundle(bundle: dict):
    """Reconstruct a model object from a bundle dict."""
    version = bundle.get("version")
    if version != BUNDLE_VERSION:
        raise ValueError(f"unsupported bundle version {version!r}")
    model_type = bundle["model_type"]
    labels = tuple(bundle["label_alphabet"])
    hyper = dict(bundle["hyperparameters"])
    weights = bundle["weights"]
    if model_type == "crf":
        return CrfModel(
            labels=labels,
            registry=_decode_registry(bundle["feature_registry"]),
            W=_array(weights["W"]),
            T=_array(weights["T"]),
            hyperparameters=hyper,
        )
    if model_type == "svm":
        return SvmModel(
            labels=labels,
            registry=_decode_registry(bundle["feature_registry"]),
            W=_array(weights["W"]),
            b=_array(weights["b"]),
            hyperparameters=hyper,
        )
    if model_type == "lstm_crf":
        input_dim = int(hyper.pop("input_dim"))
        hidden = int(hyper.pop("hidden"))
        params = ParamVector(_param_shapes(input_dim, hidden, len(labels)))
        for name in params.shapes:
            params[name] = _array(weights[name])
        return LstmCrfModel(labels=labels, input_dim=input_dim, hidden=hidden,
                            params=params, hyperparameters=hyper)
    if model_type == "cnn_re":
        input_dim = int(hyper.pop("input_dim"))
        max_len = int(hyper.pop("max_len"))
        dropout = float(hyper.pop("dropout"))
        use_positions = bool(hyper.pop("use_positions"))
        use_markers = bool(hyper.pop("use_markers"))
        params = ParamVector(_cnn_shapes(input_dim, max_len))
        for name in params.shapes:
            params[name] = _array(weights[name])
        return CnnReModel(input_dim=input_dim, max_len=max_len, params=params,
                          dropout=dropout, use_positions=use_positions,
                          use_markers=use_markers, labels=labels,
                          hyperparameters=hyper)
    raise ValueError(f"unknown model_type {model_type!r}")


def dumps_bundle(bundle: dict) -> str:
    return json.dumps(bundle, sort_keys=True, separators=(",", ":")) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write to a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model, path) -> None:
    atomic_write_text(path, dumps_bundle(model_to_bundle(model)))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_bundle(json.load(fh))
