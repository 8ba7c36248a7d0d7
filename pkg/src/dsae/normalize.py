"""Text normalization for short social-media posts.

Rule order: URL removal, handle removal, emoji removal, contraction
expansion, hashtag segmentation, lowercasing, tokenization. Stop words
are kept. Surviving characters keep a map back to the original text;
tokens produced by expansion or segmentation carry sentinel offsets.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

SYNTHETIC = -1

_URL_RE = re.compile(r"(?:https?://\S+|www\.\S+)", re.IGNORECASE)
_HANDLE_RE = re.compile(r"@\w+")

# Emoji_Presentation ranges outside the main emoji blocks, the
# U+1F300..U+1FAFF blocks themselves, and variation selectors.
_EMOJI_RANGES = (
    (0x231A, 0x231B), (0x23E9, 0x23EC), (0x23F0, 0x23F0), (0x23F3, 0x23F3),
    (0x25FD, 0x25FE), (0x2614, 0x2615), (0x2648, 0x2653), (0x267F, 0x267F),
    (0x2693, 0x2693), (0x26A1, 0x26A1), (0x26AA, 0x26AB), (0x26BD, 0x26BE),
    (0x26C4, 0x26C5), (0x26CE, 0x26CE), (0x26D4, 0x26D4), (0x26EA, 0x26EA),
    (0x26F2, 0x26F3), (0x26F5, 0x26F5), (0x26FA, 0x26FA), (0x26FD, 0x26FD),
    (0x2705, 0x2705), (0x270A, 0x270B), (0x2728, 0x2728), (0x274C, 0x274C),
    (0x274E, 0x274E), (0x2753, 0x2755), (0x2757, 0x2757), (0x2795, 0x2797),
    (0x27B0, 0x27B0), (0x27BF, 0x27BF), (0x2B1B, 0x2B1C), (0x2B50, 0x2B50),
    (0x2B55, 0x2B55), (0xFE00, 0xFE0F), (0x1F004, 0x1F004), (0x1F0CF, 0x1F0CF),
    (0x1F18E, 0x1F18E), (0x1F191, 0x1F19A), (0x1F1E6, 0x1F1FF),
    (0x1F201, 0x1F202), (0x1F21A, 0x1F21A), (0x1F22F, 0x1F22F),
    (0x1F232, 0x1F23A), (0x1F250, 0x1F251), (0x1F300, 0x1FAFF),
)


def is_emoji(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int
    orig_start: int = SYNTHETIC
    orig_end: int = SYNTHETIC
    pos: str | None = None


@dataclass(frozen=True)
class NormalizedDoc:
    doc_id: str
    original_text: str
    normalized_text: str
    tokens: tuple[Token, ...]

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


class UnigramTable:
    """Word frequencies over a background corpus, with a length-penalized
    floor probability for unknown words: 1 / (total * 10^len)."""

    def __init__(self, counts: dict[str, int]):
        if any(c <= 0 for c in counts.values()):
            raise ValueError("unigram counts must be positive")
        self.counts = dict(counts)
        self.total = sum(counts.values())

    @classmethod
    def load(cls, path) -> "UnigramTable":
        counts: dict[str, int] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                word, count = line.split("\t")
                counts[word.strip().lower()] = int(count)
        return cls(counts)

    def log_prob(self, word: str) -> float:
        c = self.counts.get(word)
        if c is not None:
            return math.log(c / self.total)
        return -math.log(self.total) - len(word) * math.log(10.0)


# Contraction handling: a fixed shipped table; ambiguous "'s" is left alone.
_CONTRACTIONS = {
    "ain't": "am not", "aren't": "are not", "can't": "can not",
    "couldn't": "could not", "didn't": "did not", "doesn't": "does not",
    "don't": "do not", "hadn't": "had not", "hasn't": "has not",
    "haven't": "have not", "he'd": "he would", "he'll": "he will",
    "i'd": "i would", "i'll": "i will", "i'm": "i am", "i've": "i have",
    "isn't": "is not", "it'd": "it would", "it'll": "it will",
    "let's": "let us", "mightn't": "might not", "mustn't": "must not",
    "shan't": "shall not", "she'd": "she would", "she'll": "she will",
    "shouldn't": "should not", "that'll": "that will", "there'd": "there would",
    "they'd": "they would", "they'll": "they will", "they're": "they are",
    "they've": "they have", "wasn't": "was not", "we'd": "we would",
    "we'll": "we will", "we're": "we are", "we've": "we have",
    "weren't": "were not", "what'll": "what will", "what're": "what are",
    "what've": "what have", "where'd": "where did", "who'd": "who would",
    "who'll": "who will", "who're": "who are", "who've": "who have",
    "won't": "will not", "wouldn't": "would not", "you'd": "you would",
    "you'll": "you will", "you're": "you are", "you've": "you have",
    "gonna": "going to", "wanna": "want to", "gotta": "got to",
    "kinda": "kind of", "gimme": "give me", "lemme": "let me",
    "cannot": "can not", "y'all": "you all", "ma'am": "madam",
    "o'clock": "of the clock",
}


def load_contractions(path=None) -> dict[str, str]:
    """Shipped table by default; optionally a TSV contraction<TAB>expansion."""
    if path is None:
        return dict(_CONTRACTIONS)
    table: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            contraction, expansion = line.split("\t")
            table[contraction.strip().lower()] = expansion.strip().lower()
    return table


_PUNCT_KEEP_INTERIOR = ("-", "'")


def _is_punct(ch: str) -> bool:
    return not ch.isalnum() and not ch.isspace()


def tokenize(text: str) -> list[Token]:
    """Whitespace tokenizer that peels leading/trailing punctuation into
    separate tokens; interior hyphens and apostrophes stay attached."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        lo, hi = i, j
        # leading punctuation
        while lo < hi and _is_punct(text[lo]):
            tokens.append(Token(text[lo], lo, lo + 1, lo, lo + 1))
            lo += 1
        # trailing punctuation (collect, emit after the core)
        trail = []
        while hi > lo and _is_punct(text[hi - 1]):
            hi -= 1
            trail.append(Token(text[hi], hi, hi + 1, hi, hi + 1))
        if lo < hi:
            tokens.append(Token(text[lo:hi], lo, hi, lo, hi))
        tokens.extend(reversed(trail))
        i = j
    return tokens


def segment_hashtag(body: str, unigrams: UnigramTable) -> list[str]:
    """Split a hashtag body into words.

    Camel-case boundaries are hard split points; each piece is then split
    by maximum likelihood under the unigram model (exact DP over all cut
    positions). All-unknown input stays whole because the floor probability
    penalizes every extra piece.
    """
    if not body:
        return []
    pieces: list[str] = []
    cur = body[0]
    for prev, ch in zip(body, body[1:]):
        if (ch.isupper() and not prev.isupper()) or (ch.isdigit() != prev.isdigit()):
            pieces.append(cur)
            cur = ch
        else:
            cur += ch
    pieces.append(cur)

    words: list[str] = []
    for piece in pieces:
        words.extend(_segment_piece(piece.lower(), unigrams))
    return words


def _segment_piece(piece: str, unigrams: UnigramTable) -> list[str]:
    n = len(piece)
    best = [0.0] + [-math.inf] * n
    back = [0] * (n + 1)
    for j in range(1, n + 1):
        for i in range(max(0, j - 24), j):
            score = best[i] + unigrams.log_prob(piece[i:j])
            if score > best[j]:
                best[j] = score
                back[j] = i
    out = []
    j = n
    while j > 0:
        i = back[j]
        out.append(piece[i:j])
        j = i
    return list(reversed(out))


def normalize(doc_id: str, text: str, unigrams: UnigramTable,
              contraction_table: dict[str, str] | None = None) -> NormalizedDoc:
    contraction_table = contraction_table if contraction_table is not None else _CONTRACTIONS

    # spans deleted wholesale (URLs, handles)
    deleted = [False] * len(text)
    for m in _URL_RE.finditer(text):
        for k in range(m.start(), m.end()):
            deleted[k] = True
    for m in _HANDLE_RE.finditer(text):
        for k in range(m.start(), m.end()):
            deleted[k] = True
    for k, ch in enumerate(text):
        if is_emoji(ch):
            deleted[k] = True

    # whitespace-chunk the survivors, keeping original offsets per chunk
    chunks: list[tuple[str, list[int]]] = []
    cur_chars: list[str] = []
    cur_idx: list[int] = []
    for k, ch in enumerate(text):
        if deleted[k]:
            continue
        if ch.isspace():
            if cur_chars:
                chunks.append(("".join(cur_chars), cur_idx))
                cur_chars, cur_idx = [], []
        else:
            cur_chars.append(ch)
            cur_idx.append(k)
    if cur_chars:
        chunks.append(("".join(cur_chars), cur_idx))

    out: list[tuple[str, int, int]] = []  # (surface, orig_start, orig_end)
    for chunk, idx in chunks:
        if chunk.startswith("#") and len(chunk) > 1:
            body = chunk[1:]
            trail = ""
            while body and _is_punct(body[-1]):
                trail = body[-1] + trail
                body = body[:-1]
            if body and all(ch.isalnum() for ch in body):
                for word in segment_hashtag(body, unigrams):
                    out.append((word, SYNTHETIC, SYNTHETIC))
                for k, ch in enumerate(trail):
                    pos = idx[1 + len(body) + k]
                    out.append((ch, pos, pos + 1))
                continue
        # peel punctuation so contractions match despite trailing marks
        lo, hi = 0, len(chunk)
        while lo < hi and _is_punct(chunk[lo]) and chunk[lo] not in "'":
            out.append((chunk[lo], idx[lo], idx[lo] + 1))
            lo += 1
        trail_toks: list[tuple[str, int, int]] = []
        while hi > lo and _is_punct(chunk[hi - 1]) and chunk[hi - 1] not in "'":
            hi -= 1
            trail_toks.append((chunk[hi], idx[hi], idx[hi] + 1))
        core = chunk[lo:hi]
        if core:
            expansion = contraction_table.get(core.lower())
            if expansion is not None:
                for word in expansion.split():
                    out.append((word, SYNTHETIC, SYNTHETIC))
            else:
                out.append((core.lower(), idx[lo], idx[hi - 1] + 1))
        out.extend(reversed(trail_toks))

    # final tokenization pass on each piece (splits residual punctuation)
    tokens: list[Token] = []
    norm_parts: list[str] = []
    cursor = 0
    for surface, ostart, oend in out:
        for sub in tokenize(surface):
            if tokens:
                cursor += 1  # joining space
            start = cursor
            end = start + len(sub.surface)
            if ostart == SYNTHETIC:
                so, eo = SYNTHETIC, SYNTHETIC
            elif len(sub.surface) == len(surface):
                so, eo = ostart, oend
            else:
                so, eo = ostart + sub.start, ostart + sub.end
            tokens.append(Token(sub.surface, start, end, so, eo))
            norm_parts.append(sub.surface)
            cursor = end
    return NormalizedDoc(
        doc_id=doc_id,
        original_text=text,
        normalized_text=" ".join(norm_parts),
        tokens=tuple(tokens),
    )


# ------------------------------------------------------------------ POS tags

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "PUNCT", "X")

_CLOSED_CLASS = {
    "DET": {"the", "a", "an", "this", "that", "these", "those", "some", "any",
            "no", "every", "each", "all", "both", "either", "neither"},
    "PRON": {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her",
             "us", "them", "my", "your", "his", "its", "our", "their", "mine",
             "yours", "hers", "ours", "theirs", "who", "whom", "what", "which",
             "myself", "yourself", "himself", "herself", "itself", "ourselves",
             "themselves", "someone", "anyone", "everyone", "nothing",
             "something", "anything", "everything"},
    "ADP": {"in", "on", "at", "by", "for", "with", "about", "against",
            "between", "into", "through", "during", "before", "after",
            "above", "below", "to", "from", "up", "down", "of", "off",
            "over", "under", "near", "without", "within"},
    "VERB": {"is", "am", "are", "was", "were", "be", "been", "being", "have",
             "has", "had", "do", "does", "did", "will", "would", "shall",
             "should", "may", "might", "must", "can", "could", "not",
             "get", "got", "make", "made", "take", "took", "feel", "felt",
             "go", "went", "gave", "give", "cause", "caused", "causes",
             "help", "helps", "helped"},
    "ADV": {"very", "too", "so", "just", "now", "then", "here", "there",
            "always", "never", "often", "really", "quite", "almost",
            "again", "still", "also", "only", "even", "well"},
}

_SUFFIX_RULES = (
    ("ing", "VERB"), ("ed", "VERB"), ("ly", "ADV"), ("ous", "ADJ"),
    ("ful", "ADJ"), ("ive", "ADJ"), ("able", "ADJ"), ("ible", "ADJ"),
    ("al", "ADJ"), ("ic", "ADJ"), ("less", "ADJ"), ("ish", "ADJ"),
    ("ness", "NOUN"), ("ment", "NOUN"), ("tion", "NOUN"), ("sion", "NOUN"),
    ("ity", "NOUN"), ("er", "NOUN"), ("ist", "NOUN"),
)


def _fallback_tag(surface: str) -> str:
    if all(_is_punct(ch) for ch in surface):
        return "PUNCT"
    if surface.replace(".", "").replace(",", "").isdigit():
        return "NUM"
    for tag, words in _CLOSED_CLASS.items():
        if surface in words:
            return tag
    for suffix, tag in _SUFFIX_RULES:
        if len(surface) > len(suffix) + 1 and surface.endswith(suffix):
            return tag
    if surface.isalpha():
        return "NOUN"
    return "X"


class ExternalPos:
    """Per-token POS tags from a TSV: doc_id<TAB>token_index<TAB>tag."""

    def __init__(self, table: dict[tuple[str, int], str]):
        self.table = dict(table)

    @classmethod
    def load(cls, path) -> "ExternalPos":
        table: dict[tuple[str, int], str] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                doc_id, index, tag = line.split("\t")
                table[(doc_id, int(index))] = tag
        return cls(table)


def pos_tag(doc: NormalizedDoc, pos_source: ExternalPos | None = None) -> NormalizedDoc:
    """Attach a coarse POS tag to every token.

    With an external source, tags are copied verbatim; missing entries are
    an error. Otherwise the built-in closed-class + suffix tagger is used.
    """
    tagged = []
    for i, tok in enumerate(doc.tokens):
        if pos_source is not None:
            key = (doc.doc_id, i)
            if key not in pos_source.table:
                raise KeyError(f"no POS tag for doc {doc.doc_id!r} token {i}")
            tag = pos_source.table[key]
        else:
            tag = _fallback_tag(tok.surface)
        tagged.append(replace(tok, pos=tag))
    return replace(doc, tokens=tuple(tagged))
