"""Corpus-level signal aggregation: canonicalized (supplement, event)
pairs with per-document frequencies, knowledge-base comparison, and
report emission.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

from .corpus import Lexicon
from .normalize import NormalizedDoc
from .pipeline import PipelineOutput


@dataclass(frozen=True)
class SignalRecord:
    supplement_canonical: str
    deficiency: bool
    event_term: str
    relation: str
    frequency: int
    example_doc_ids: tuple[str, ...]
    in_kb: bool | None = None
    canonical_unmatched: bool = False


class KnowledgeBase:
    """Case-folded (supplement, event) pairs with a relation category."""

    def __init__(self, pairs: set[tuple[str, str, str]]):
        self.pairs = {(s.lower(), e.lower(), r) for s, e, r in pairs}
        self._no_relation = {(s, e) for s, e, _ in self.pairs}

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return (pair[0].lower(), pair[1].lower()) in self._no_relation

    @classmethod
    def load(cls, path) -> "KnowledgeBase":
        pairs: set[tuple[str, str, str]] = set()
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"supplement", "event", "relation"}
            if not required <= set(reader.fieldnames or []):
                raise ValueError(f"{path}: KB file needs header columns {sorted(required)}")
            for row in reader:
                pairs.add((row["supplement"].strip().lower(),
                           row["event"].strip().lower(),
                           row["relation"].strip()))
        return cls(pairs)


def aggregate(outputs: list[PipelineOutput], docs: dict[str, NormalizedDoc],
              ds_lexicon: Lexicon, max_examples: int = 3) -> list[SignalRecord]:
    """One record per distinct (canonical supplement, deficiency, event,
    relation); frequency counts distinct supporting documents."""
    support: dict[tuple, set[str]] = {}
    unmatched: dict[tuple, bool] = {}
    for out in outputs:
        doc = docs[out.doc_id]
        for rel in out.relations:
            surface = rel.head.surface(doc).lower()
            if surface in ds_lexicon:
                canonical = ds_lexicon.canonical(surface)
                miss = False
            else:
                canonical = surface
                miss = True
            key = (canonical, rel.head.deficiency, rel.tail.surface(doc).lower(), rel.label)
            support.setdefault(key, set()).add(out.doc_id)
            unmatched[key] = unmatched.get(key, False) or miss
    records = []
    for key, doc_ids in support.items():
        canonical, deficiency, event, relation = key
        records.append(SignalRecord(
            supplement_canonical=canonical,
            deficiency=deficiency,
            event_term=event,
            relation=relation,
            frequency=len(doc_ids),
            example_doc_ids=tuple(sorted(doc_ids)[:max_examples]),
            canonical_unmatched=unmatched[key],
        ))
    return records


def top_k(records: list[SignalRecord], k: int = 200,
          relation: str | None = None) -> list[SignalRecord]:
    """Descending frequency; ties by (supplement, event) lexicographic order."""
    pool = [r for r in records if relation is None or r.relation == relation]
    return sorted(pool, key=lambda r: (-r.frequency, r.supplement_canonical, r.event_term))[:k]


def compare_kb(records: list[SignalRecord], kb: KnowledgeBase) -> list[SignalRecord]:
    """Membership on the (canonical, event) pair; the deficiency flag is
    carried alongside, not folded into the lookup."""
    return [replace(r, in_kb=(r.supplement_canonical, r.event_term) in kb)
            for r in records]


def sample_examples(record: SignalRecord, corpus_index: dict[str, str],
                    n: int = 3) -> list[str]:
    """Texts of the first n supporting documents, ascending doc id."""
    out = []
    for doc_id in sorted(record.example_doc_ids)[:n]:
        if doc_id not in corpus_index:
            raise KeyError(f"signal example references unknown doc {doc_id!r}")
        out.append(corpus_index[doc_id])
    return out


_COLUMNS = ("supplement", "deficiency", "event", "relation", "frequency", "in_kb", "examples")


def emit_report(records: list[SignalRecord], path, format: str = "tsv",
                corpus_index: dict[str, str] | None = None) -> None:
    if format not in ("tsv", "markdown"):
        raise ValueError(f"unknown report format {format!r}")
    rows = []
    for r in records:
        examples = ""
        if corpus_index is not None:
            examples = " | ".join(sample_examples(r, corpus_index))
        rows.append((r.supplement_canonical, str(r.deficiency).lower(), r.event_term,
                     r.relation, str(r.frequency),
                     "" if r.in_kb is None else str(r.in_kb).lower(), examples))
    with open(path, "w", encoding="utf-8") as fh:
        if format == "tsv":
            fh.write("\t".join(_COLUMNS) + "\n")
            for row in rows:
                fh.write("\t".join(cell.replace("\t", " ") for cell in row) + "\n")
        else:
            fh.write("| " + " | ".join(_COLUMNS) + " |\n")
            fh.write("|" + "---|" * len(_COLUMNS) + "\n")
            for row in rows:
                fh.write("| " + " | ".join(cell.replace("|", "\\|") for cell in row) + " |\n")


def parse_report(path) -> list[SignalRecord]:
    """Read back a TSV report (round-trip check and downstream reuse)."""
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != _COLUMNS:
            raise ValueError(f"{path}: unexpected report header")
        for line in fh:
            supp, deficiency, event, relation, freq, in_kb, _examples = line.rstrip("\n").split("\t")
            records.append(SignalRecord(
                supplement_canonical=supp,
                deficiency=deficiency == "true",
                event_term=event,
                relation=relation,
                frequency=int(freq),
                example_doc_ids=(),
                in_kb=None if in_kb == "" else in_kb == "true",
            ))
    return records
