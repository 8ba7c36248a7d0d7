"""Command-line surface tying the modules into reproducible experiments.

One JSON config document per run; command-line flags override config keys.
Every command writes its artifacts under the output directory together
with a manifest (config snapshot, seeds, content hashes of inputs and
artifacts). Exit status: 0 success, 1 runtime failure, 2 invalid config.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .annotation import (AnnotatedDoc, generate_relation_instances, parse_standoff,
                         split_dataset, to_bio)
from .corpus import LoadReport, filter_candidate, load_lexicon, load_tweets
from .embeddings import load_static
from .evaluate import (EvalCounts, align_spans, metrics, relation_metrics,
                       replicate)
from .annotation import from_bio
from .ner import (CrfConfig, LstmCrfConfig, crf_train, lstm_crf_train, svm_train)
from .ner.features import featurize
from .ner.predict import decode_labels, doc_matrix
from .normalize import UnigramTable, normalize
from .numeric.optim import grad_check
from .pipeline import evaluate_pipeline, run_pipeline
from .relation import CnnReConfig, cnn_train, encode_instance
from .serialization import atomic_write_text, load_model, save_model
from .signals import KnowledgeBase, aggregate, compare_kb, emit_report, parse_report, top_k
from .synthetic import generate_corpus, synthetic_embeddings, synthetic_lexicons

COMMANDS = ("ingest", "train-ner", "eval-ner", "train-re", "eval-re", "pipeline",
            "replicate", "aggregate", "compare-kb", "report", "gradcheck")

_PATH_KEYS = ("corpus", "ds_lexicon", "event_lexicon", "embeddings",
              "annotations", "kb", "unigrams")

DEFAULTS = {
    "output_dir": "out",
    "model": "crf",
    "seed": 0,
    "n_runs": 5,
    "synthetic_docs": 1000,
    "max_len": 64,
    "crf": {"c1": 0.05, "c2": 0.05, "max_iter": 200},
    "svm": {"epochs": 5, "lr": 0.1, "l2": 1e-4},
    "lstm_crf": {"epochs": 40, "batch_size": 32, "lr": 1e-3, "weight_decay": 1e-4},
    "cnn": {"epochs": 40, "batch_size": 32, "lr": 1e-4, "weight_decay": 1e-5},
}


class ConfigError(Exception):
    """Invalid configuration; carries field-level messages."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_config(args: argparse.Namespace) -> dict:
    config = json.loads(json.dumps(DEFAULTS))  # deep copy
    if args.config:
        if not os.path.isfile(args.config):
            raise ConfigError([f"config: file not found: {args.config}"])
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: invalid JSON ({exc})"]) from exc
        if not isinstance(loaded, dict):
            raise ConfigError(["config: top-level value must be an object"])
        for key, value in loaded.items():
            if isinstance(value, dict) and isinstance(config.get(key), dict):
                config[key].update(value)
            else:
                config[key] = value
    for flag in ("seed", "model", "embeddings", "corpus", "annotations",
                 "ds_lexicon", "event_lexicon", "kb", "synthetic_docs", "signals"):
        value = getattr(args, flag, None)
        if value is not None:
            config[flag] = value
    if getattr(args, "out", None) is not None:
        config["output_dir"] = args.out
    if getattr(args, "runs", None) is not None:
        config["n_runs"] = args.runs
    return config


def _validate(config: dict, command: str) -> None:
    errors = []
    for key in _PATH_KEYS:
        path = config.get(key)
        if path is not None and not os.path.isfile(path):
            errors.append(f"{key}: file not found: {path}")
    if not isinstance(config.get("seed"), int):
        errors.append("seed: must be an integer")
    if not isinstance(config.get("n_runs"), int) or config["n_runs"] < 1:
        errors.append("n_runs: must be a positive integer")
    if config.get("model") not in ("crf", "svm", "lstm_crf"):
        errors.append(f"model: unknown model {config.get('model')!r}")
    if not isinstance(config.get("synthetic_docs"), int) or config["synthetic_docs"] < 3:
        errors.append("synthetic_docs: must be an integer >= 3")
    if command == "ingest":
        for key in ("corpus", "ds_lexicon", "event_lexicon"):
            if config.get(key) is None:
                errors.append(f"{key}: required for ingest")
    if command == "compare-kb" and config.get("kb") is None:
        errors.append("kb: required for compare-kb")
    if errors:
        raise ConfigError(errors)


def _write_manifest(config: dict, command: str, artifacts: list[str]) -> str:
    inputs = {key: {"path": config[key], "sha256": _sha256(config[key])}
              for key in _PATH_KEYS if config.get(key)}
    manifest = {
        "command": command,
        "config": config,
        "seed": config["seed"],
        "inputs": inputs,
        "artifacts": {os.path.basename(p): _sha256(p) for p in artifacts},
    }
    path = os.path.join(config["output_dir"], "manifest.json")
    atomic_write_text(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _resolve_resources(config: dict):
    """Embeddings and lexicons from config paths, synthetic fallbacks otherwise."""
    if config.get("embeddings"):
        emb = load_static(config["embeddings"])
    else:
        emb = synthetic_embeddings()
    if config.get("ds_lexicon") and config.get("event_lexicon"):
        ds_lex = load_lexicon(config["ds_lexicon"], "Supplement")
        event_lex = load_lexicon(config["event_lexicon"], "Symptom")
    else:
        ds_lex, event_lex = synthetic_lexicons()
    return emb, ds_lex, event_lex


def _resolve_docs(config: dict) -> list[AnnotatedDoc]:
    """Annotated documents: a real corpus plus standoff files when both are
    configured, otherwise the seeded synthetic corpus."""
    corpus, annotations = config.get("corpus"), config.get("annotations")
    if corpus and annotations:
        unigrams = (UnigramTable.load(config["unigrams"]) if config.get("unigrams")
                    else UnigramTable({"the": 1}))
        with open(annotations, encoding="utf-8") as fh:
            ann_by_doc = json.load(fh)  # doc_id -> standoff text
        docs = []
        for tweet in load_tweets(corpus):
            if tweet.id not in ann_by_doc:
                continue
            doc = normalize(tweet.id, tweet.text, unigrams)
            docs.append(parse_standoff(ann_by_doc[tweet.id], doc))
        if not docs:
            raise RuntimeError("no annotated documents found")
        return docs
    return generate_corpus(config["synthetic_docs"], seed=config["seed"])


def _train_ner_model(train, dev, config: dict, emb, lexicons, seed: int):
    name = config["model"]
    feats = [(featurize(d.doc, emb, lexicons), to_bio(d.doc, d.entities)) for d in train]
    if name == "crf":
        c = config["crf"]
        return crf_train(feats, CrfConfig(c1=c["c1"], c2=c["c2"], max_iter=c["max_iter"]))
    if name == "svm":
        c = config["svm"]
        return svm_train(feats, epochs=c["epochs"], lr=c["lr"], l2=c["l2"], seed=seed)
    c = config["lstm_crf"]
    pack = lambda ds: [(doc_matrix(d.doc, emb), to_bio(d.doc, d.entities)) for d in ds]
    return lstm_crf_train(pack(train), LstmCrfConfig(
        epochs=c["epochs"], batch_size=c["batch_size"], lr=c["lr"],
        weight_decay=c["weight_decay"], seed=seed), dev=pack(dev))


def _ner_metrics(model, docs, emb, lexicons) -> dict:
    per_type: dict[str, EvalCounts] = {}
    for d in docs:
        labels = decode_labels(model, d.doc, emb, lexicons)
        for etype, counts in align_spans(list(d.entities), from_bio(d.doc, labels)).items():
            per_type.setdefault(etype, EvalCounts()).add(counts)
    return {etype: metrics(counts) for etype, counts in per_type.items()}


def _encode_all(docs, emb, max_len: int):
    return [encode_instance(ri, d.doc, emb, max_len)
            for d in docs for ri in generate_relation_instances(d)]


def _metrics_tsv(path, rows: list[tuple]) -> None:
    lines = ["\t".join(("name", "precision", "recall", "f1"))]
    for name, m in rows:
        lines.append("\t".join((name, repr(m.precision), repr(m.recall), repr(m.f1))))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _out(config: dict, name: str) -> str:
    return os.path.join(config["output_dir"], name)


def cmd_ingest(config: dict) -> list[str]:
    ds_lex = load_lexicon(config["ds_lexicon"], "Supplement")
    event_lex = load_lexicon(config["event_lexicon"], "Symptom")
    report = LoadReport()
    kept, seen = [], 0
    for tweet in load_tweets(config["corpus"], report):
        seen += 1
        ok, ds_hits, event_hits = filter_candidate(tweet, ds_lex, event_lex)
        if ok:
            kept.append({"id": tweet.id, "text": tweet.text, "lang": tweet.lang,
                         "ds_terms": sorted({h.canonical for h in ds_hits}),
                         "event_terms": sorted({h.canonical for h in event_hits})})
    out = _out(config, "ingested.jsonl")
    atomic_write_text(out, "".join(json.dumps(row, sort_keys=True) + "\n" for row in kept))
    summary = _out(config, "ingest_summary.json")
    atomic_write_text(summary, json.dumps({
        "loaded": report.loaded, "skipped": report.skipped,
        "seen": seen, "kept": len(kept)}, sort_keys=True, indent=2) + "\n")
    print(f"ingest: kept {len(kept)} of {report.loaded} loaded "
          f"({report.skipped} malformed lines skipped)")
    return [out, summary]


def cmd_train_ner(config: dict) -> list[str]:
    emb, ds_lex, event_lex = _resolve_resources(config)
    lexicons = [ds_lex, event_lex]
    train, dev, _ = split_dataset(_resolve_docs(config), seed=config["seed"])
    model = _train_ner_model(train, dev, config, emb, lexicons, config["seed"])
    out = _out(config, f"ner_{config['model']}.json")
    save_model(model, out)
    dev_metrics = _ner_metrics(model, dev, emb, lexicons)
    print(f"train-ner: {config['model']} dev micro F1 {dev_metrics['micro'].f1:.4f}")
    return [out]


def cmd_eval_ner(config: dict) -> list[str]:
    emb, ds_lex, event_lex = _resolve_resources(config)
    lexicons = [ds_lex, event_lex]
    _, _, test = split_dataset(_resolve_docs(config), seed=config["seed"])
    model = load_model(_out(config, f"ner_{config['model']}.json"))
    per_type = _ner_metrics(model, test, emb, lexicons)
    out = _out(config, f"ner_{config['model']}_metrics.tsv")
    _metrics_tsv(out, sorted(per_type.items()))
    print(f"eval-ner: {config['model']} test micro F1 {per_type['micro'].f1:.4f}")
    return [out]


def cmd_train_re(config: dict) -> list[str]:
    emb, _, _ = _resolve_resources(config)
    train, dev, _ = split_dataset(_resolve_docs(config), seed=config["seed"])
    c = config["cnn"]
    model = cnn_train(
        _encode_all(train, emb, config["max_len"]),
        CnnReConfig(max_len=config["max_len"], epochs=c["epochs"],
                    batch_size=c["batch_size"], lr=c["lr"],
                    weight_decay=c["weight_decay"], seed=config["seed"]),
        dev=_encode_all(dev, emb, config["max_len"]))
    out = _out(config, "re_cnn.json")
    save_model(model, out)
    print("train-re: saved CNN relation model")
    return [out]


def cmd_eval_re(config: dict) -> list[str]:
    emb, _, _ = _resolve_resources(config)
    _, _, test = split_dataset(_resolve_docs(config), seed=config["seed"])
    model = load_model(_out(config, "re_cnn.json"))
    from .relation import classify_pairs
    gold = [r for d in test for r in d.relations]
    predicted = [r for d in test
                 for r in classify_pairs(d.doc, list(d.entities), model, emb)]
    per_label = relation_metrics(gold, predicted)
    out = _out(config, "re_cnn_metrics.tsv")
    _metrics_tsv(out, sorted(per_label.items()))
    for label, m in sorted(per_label.items()):
        print(f"eval-re: {label} F1 {m.f1:.4f}")
    return [out]


def cmd_pipeline(config: dict) -> list[str]:
    emb, ds_lex, event_lex = _resolve_resources(config)
    lexicons = [ds_lex, event_lex]
    _, _, test = split_dataset(_resolve_docs(config), seed=config["seed"])
    ner = load_model(_out(config, f"ner_{config['model']}.json"))
    re_model = load_model(_out(config, "re_cnn.json"))
    per_label, breakdown, outputs = evaluate_pipeline(test, ner, re_model, emb, lexicons)

    out_jsonl = _out(config, "pipeline.jsonl")
    lines = []
    for o in outputs:
        lines.append(json.dumps({
            "doc_id": o.doc_id,
            "entities": [{"id": e.id, "type": e.etype, "start": e.token_start,
                          "end": e.token_end} for e in o.entities],
            "relations": [{"head": r.head.id, "tail": r.tail.id, "label": r.label}
                          for r in o.relations],
        }, sort_keys=True) + "\n")
    atomic_write_text(out_jsonl, "".join(lines))

    out_metrics = _out(config, "pipeline_metrics.tsv")
    _metrics_tsv(out_metrics, sorted(per_label.items()))
    out_errors = _out(config, "pipeline_errors.tsv")
    rows = ["\t".join(("label", "category", "count"))]
    for category in ("fp_spurious_relation", "fp_wrong_entities", "fn_mislabeled",
                     "fn_missed_label", "fn_missed_entity"):
        for label, count in sorted(getattr(breakdown, category).items()):
            rows.append(f"{label}\t{category}\t{count}")
    atomic_write_text(out_errors, "\n".join(rows) + "\n")
    for label, m in sorted(per_label.items()):
        print(f"pipeline: {label} F1 {m.f1:.4f}")
    return [out_jsonl, out_metrics, out_errors]


def cmd_replicate(config: dict) -> list[str]:
    emb, ds_lex, event_lex = _resolve_resources(config)
    lexicons = [ds_lex, event_lex]
    docs = _resolve_docs(config)

    def experiment(seed: int):
        train, dev, test = split_dataset(docs, seed=seed)
        model = _train_ner_model(train, dev, config, emb, lexicons, seed)
        return _ner_metrics(model, test, emb, lexicons)["micro"]

    stats, per_run = replicate(experiment, n=config["n_runs"], base_seed=config["seed"])
    out = _out(config, f"replicate_{config['model']}.tsv")
    lines = ["\t".join(("metric", "mean", "std", "n", "values"))]
    for name in sorted(stats):
        s = stats[name]
        values = ",".join(repr(v) for v in s.values)
        lines.append(f"{name}\t{s.mean!r}\t{s.std!r}\t{s.n}\t{values}")
    atomic_write_text(out, "\n".join(lines) + "\n")
    f1 = stats["f1"]
    print(f"replicate: {config['model']} micro F1 {f1.mean:.4f} +/- {f1.std:.4f} "
          f"over {f1.n} runs")
    return [out]


def cmd_aggregate(config: dict) -> list[str]:
    emb, ds_lex, event_lex = _resolve_resources(config)
    lexicons = [ds_lex, event_lex]
    docs = _resolve_docs(config)
    ner = load_model(_out(config, f"ner_{config['model']}.json"))
    re_model = load_model(_out(config, "re_cnn.json"))
    outputs = [run_pipeline(d.doc, ner, re_model, emb, lexicons) for d in docs]
    records = top_k(aggregate(outputs, {d.doc.doc_id: d.doc for d in docs}, ds_lex))
    out = _out(config, "signals.tsv")
    emit_report(records, out, format="tsv")
    print(f"aggregate: {len(records)} signals from {len(docs)} documents")
    return [out]


def cmd_compare_kb(config: dict) -> list[str]:
    signals_path = config.get("signals") or _out(config, "signals.tsv")
    records = parse_report(signals_path)
    kb = KnowledgeBase.load(config["kb"])
    records = compare_kb(records, kb)
    out = _out(config, "signals_kb.tsv")
    emit_report(records, out, format="tsv")
    novel = sum(1 for r in records if r.in_kb is False)
    print(f"compare-kb: {novel} of {len(records)} signals are novel")
    return [out]


def cmd_report(config: dict) -> list[str]:
    signals_path = config.get("signals") or _out(config, "signals_kb.tsv")
    if not os.path.isfile(signals_path):
        signals_path = _out(config, "signals.tsv")
    records = parse_report(signals_path)
    out = _out(config, "report.md")
    emit_report(records, out, format="markdown")
    print(f"report: wrote {len(records)} rows to {out}")
    return [out]


def cmd_gradcheck(config: dict) -> list[str]:
    from .embeddings import EmbeddingTable
    from .ner.crf import CrfModel, crf_neg_log_likelihood
    from .ner.lstm_crf import LstmCrfModel, lstm_crf_objective
    from .relation import CnnReModel, cnn_objective
    from .numeric.rng import Rng
    from .synthetic import vocabulary

    _, ds_lex, event_lex = _resolve_resources(config)
    # small vectors keep the finite-difference sweeps fast
    words = vocabulary()
    emb = EmbeddingTable(8, {w: i for i, w in enumerate(words)},
                         Rng(config["seed"], stream=89).normal((len(words), 8)))
    docs = generate_corpus(10, seed=config["seed"])
    rows = []

    feats = [(featurize(d.doc, emb, [ds_lex, event_lex]), to_bio(d.doc, d.entities))
             for d in docs[:3]]
    model = crf_train(feats, CrfConfig(max_iter=2))
    rng = Rng(config["seed"], stream=97)
    worst = 0.0
    for features, gold in feats:
        def crf_obj(x, features=features, gold=gold):
            probe = CrfModel(labels=model.labels, registry=model.registry,
                             W=x[:model.W.size].reshape(model.W.shape),
                             T=x[model.W.size:].reshape(model.T.shape))
            return crf_neg_log_likelihood(probe, features, gold)
        x0 = rng.normal((model.W.size + model.T.size,), scale=0.1)
        worst = max(worst, grad_check(crf_obj, x0))
    rows.append(("crf", worst))

    worst = 0.0
    small = LstmCrfModel.init(emb.dim + 1, 4, model.labels, seed=config["seed"])
    for d in docs[:3]:
        X = doc_matrix(d.doc, emb)
        y = np.asarray([model.labels.index(lab) for lab in to_bio(d.doc, d.entities)])
        x0 = rng.normal((small.params.size,), scale=0.1)
        worst = max(worst, grad_check(lstm_crf_objective(small, X, y), x0))
    rows.append(("lstm_crf", worst))

    worst = 0.0
    cnn_cfg = CnnReConfig(max_len=16)
    cnn = None
    checked = 0
    for d in docs:
        if checked >= 2:
            break
        for ri in generate_relation_instances(d):
            enc = encode_instance(ri, d.doc, emb, 16)
            if cnn is None:
                cnn = CnnReModel.init(enc.tokens.shape[1], cnn_cfg)
            x0 = rng.normal((cnn.params.size,), scale=0.1)
            # smaller step: keeps the sweep clear of ReLU/argmax kinks
            worst = max(worst, grad_check(cnn_objective(cnn, enc), x0, eps=1e-6))
            checked += 1
            break
    rows.append(("cnn_re", worst))

    out = _out(config, "gradcheck.tsv")
    lines = ["model\tmax_rel_error"]
    ok = True
    for name, err in rows:
        lines.append(f"{name}\t{err!r}")
        print(f"gradcheck: {name} max relative error {err:.3e}")
        ok = ok and err < 1e-4
    atomic_write_text(out, "\n".join(lines) + "\n")
    if not ok:
        raise RuntimeError("gradient check exceeded 1e-4")
    return [out]


_HANDLERS = {
    "ingest": cmd_ingest,
    "train-ner": cmd_train_ner,
    "eval-ner": cmd_eval_ner,
    "train-re": cmd_train_re,
    "eval-re": cmd_eval_re,
    "pipeline": cmd_pipeline,
    "replicate": cmd_replicate,
    "aggregate": cmd_aggregate,
    "compare-kb": cmd_compare_kb,
    "report": cmd_report,
    "gradcheck": cmd_gradcheck,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsae",
        description="Supplement adverse-event and indication signal detection.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int)
        p.add_argument("--runs", type=int, help="number of replicate runs")
        p.add_argument("--model", choices=("crf", "svm", "lstm_crf"))
        p.add_argument("--corpus", help="tweet JSONL file")
        p.add_argument("--annotations", help="JSON map doc_id -> standoff text")
        p.add_argument("--ds-lexicon", dest="ds_lexicon")
        p.add_argument("--event-lexicon", dest="event_lexicon")
        p.add_argument("--embeddings", help="word vectors in text format")
        p.add_argument("--kb", help="knowledge-base CSV")
        p.add_argument("--signals", help="signals TSV (compare-kb/report input)")
        p.add_argument("--synthetic-docs", dest="synthetic_docs", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        _validate(config, args.command)
    except ConfigError as exc:
        for message in exc.errors:
            print(f"config error: {message}", file=sys.stderr)
        return 2
    os.makedirs(config["output_dir"], exist_ok=True)
    try:
        artifacts = _HANDLERS[args.command](config)
        _write_manifest(config, args.command, artifacts)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
