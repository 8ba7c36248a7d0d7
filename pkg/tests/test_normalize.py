import itertools
import math

import pytest

from dsae.normalize import (ExternalPos, SYNTHETIC, UnigramTable,
                            load_contractions, normalize, pos_tag,
                            segment_hashtag, tokenize)


@pytest.fixture
def unigrams():
    return UnigramTable({
        "vitamin": 50, "c": 30, "gave": 20, "me": 40, "a": 100,
        "headache": 25, "fish": 15, "oil": 15, "take": 10, "daily": 10,
    })


# ------------------------------------------------------------------- tokenize

def test_tokenize_offsets_roundtrip():
    text = "hello, (world)! it's a-ok"
    toks = tokenize(text)
    for t in toks:
        assert text[t.start:t.end] == t.surface
    assert [t.surface for t in toks] == ["hello", ",", "(", "world", ")", "!",
                                         "it's", "a-ok"]


def test_tokenize_keeps_interior_hyphen_apostrophe():
    assert [t.surface for t in tokenize("state-of-the-art isn't")] == [
        "state-of-the-art", "isn't"]


# ----------------------------------------------------------- unigrams/hashtag

def test_unigram_floor_probability(unigrams):
    total = unigrams.total
    assert unigrams.log_prob("vitamin") == pytest.approx(math.log(50 / total))
    assert unigrams.log_prob("zzz") == pytest.approx(
        -math.log(total) - 3 * math.log(10.0))


def exhaustive_best_split(piece, unigrams):
    """Oracle: try every cut of the piece, return the max-likelihood split."""
    n = len(piece)
    best, best_score = None, -math.inf
    for mask in itertools.product([0, 1], repeat=max(0, n - 1)):
        cuts = [0] + [i + 1 for i, m in enumerate(mask) if m] + [n]
        words = [piece[a:b] for a, b in zip(cuts, cuts[1:])]
        if any(len(w) > 24 for w in words):
            continue
        score = sum(unigrams.log_prob(w) for w in words)
        if score > best_score:
            best, best_score = words, score
    return best


def test_segment_hashtag_matches_exhaustive_dp(unigrams):
    for body in ("vitaminc", "fishoil", "takedaily", "headache", "cgavemea",
                 "zzqj", "avitamin"):
        assert segment_hashtag(body, unigrams) == exhaustive_best_split(body, unigrams)


def test_segment_hashtag_camel_case_hard_splits(unigrams):
    assert segment_hashtag("VitaminC", unigrams) == ["vitamin", "c"]
    assert segment_hashtag("FishOilDaily", unigrams) == ["fish", "oil", "daily"]


def test_segment_hashtag_digit_boundary(unigrams):
    assert segment_hashtag("vitamin12", unigrams) == ["vitamin", "12"]


def test_segment_hashtag_unknown_stays_whole(unigrams):
    assert segment_hashtag("qzxv", unigrams) == ["qzxv"]


# ------------------------------------------------------------------ normalize

def test_normalize_removes_urls_handles_emoji(unigrams):
    doc = normalize("d1", "@user vitamin c rocks \U0001F600 https://x.co/abc", unigrams)
    assert doc.surfaces() == ["vitamin", "c", "rocks"]


def test_normalize_offsets_point_to_original(unigrams):
    text = "@u Fish OIL!"
    doc = normalize("d1", text, unigrams)
    assert doc.surfaces() == ["fish", "oil", "!"]
    fish = doc.tokens[0]
    assert text[fish.orig_start:fish.orig_end] == "Fish"
    oil = doc.tokens[1]
    assert text[oil.orig_start:oil.orig_end] == "OIL"


def test_normalize_expands_contractions_with_synthetic_offsets(unigrams):
    doc = normalize("d1", "it doesn't work", unigrams)
    assert doc.surfaces() == ["it", "does", "not", "work"]
    does = doc.tokens[1]
    assert does.orig_start == SYNTHETIC and does.orig_end == SYNTHETIC


def test_normalize_segments_hashtags(unigrams):
    doc = normalize("d1", "ugh #VitaminC gave me a headache", unigrams)
    assert doc.surfaces() == ["ugh", "vitamin", "c", "gave", "me", "a", "headache"]
    assert doc.tokens[1].orig_start == SYNTHETIC


def test_normalize_lowercases_and_aligns_normalized_offsets(unigrams):
    doc = normalize("d1", "Vitamin C Daily", unigrams)
    assert doc.normalized_text == "vitamin c daily"
    for t in doc.tokens:
        assert doc.normalized_text[t.start:t.end] == t.surface


def test_load_contractions_shipped_and_file(tmp_path):
    table = load_contractions()
    assert table["won't"] == "will not"
    path = tmp_path / "contractions.tsv"
    path.write_text("idk\ti do not know\n")
    assert load_contractions(path) == {"idk": "i do not know"}


# ------------------------------------------------------------------------ POS

def test_pos_fallback_rules(unigrams):
    doc = normalize("d1", "the vitamins helped quickly !", unigrams)
    tagged = pos_tag(doc)
    by_surface = {t.surface: t.pos for t in tagged.tokens}
    assert by_surface["the"] == "DET"
    assert by_surface["helped"] == "VERB"
    assert by_surface["quickly"] == "ADV"
    assert by_surface["!"] == "PUNCT"
    assert by_surface["vitamins"] == "NOUN"


def test_pos_external_verbatim_and_missing(unigrams):
    doc = normalize("d1", "vitamin c", unigrams)
    source = ExternalPos({("d1", 0): "NOUN", ("d1", 1): "X"})
    tagged = pos_tag(doc, source)
    assert [t.pos for t in tagged.tokens] == ["NOUN", "X"]
    with pytest.raises(KeyError):
        pos_tag(doc, ExternalPos({("d1", 0): "NOUN"}))


def test_pos_external_load(tmp_path, unigrams):
    path = tmp_path / "pos.tsv"
    path.write_text("d1\t0\tNOUN\nd1\t1\tNUM\n")
    doc = normalize("d1", "vitamin 12", unigrams)
    tagged = pos_tag(doc, ExternalPos.load(path))
    assert [t.pos for t in tagged.tokens] == ["NOUN", "NUM"]
