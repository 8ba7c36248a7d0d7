"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from dsae.annotation import EntitySpan
from dsae.normalize import NormalizedDoc, Token


def make_doc(doc_id: str, words: list[str]) -> NormalizedDoc:
    """A NormalizedDoc from plain words, single-space joined."""
    tokens = []
    cursor = 0
    for w in words:
        if tokens:
            cursor += 1
        tokens.append(Token(w, cursor, cursor + len(w)))
        cursor += len(w)
    return NormalizedDoc(
        doc_id=doc_id,
        original_text=" ".join(words),
        normalized_text=" ".join(words),
        tokens=tuple(tokens),
    )


def span(doc: NormalizedDoc, eid: str, etype: str, tok_start: int, tok_end: int,
         **kw) -> EntitySpan:
    return EntitySpan(
        id=eid, etype=etype,
        char_start=doc.tokens[tok_start].start,
        char_end=doc.tokens[tok_end - 1].end,
        token_start=tok_start, token_end=tok_end, **kw,
    )


def brute_force_paths(unary: np.ndarray, transitions: np.ndarray):
    """All label paths with their scores, by exhaustive enumeration."""
    L, K = unary.shape
    paths = [([], 0.0)]
    for t in range(L):
        nxt = []
        for path, score in paths:
            for k in range(K):
                s = score + unary[t, k]
                if path:
                    s += transitions[path[-1], k]
                nxt.append((path + [k], s))
        paths = nxt
    return paths
