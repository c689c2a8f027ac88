"""ROUGE against a naive independent oracle and frozen expected values."""
from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keyrel.rouge import (
    RougeScores,
    corpus_rouge,
    display_value,
    rouge_l,
    rouge_n,
    score_pair,
    tokenize,
)

# --- oracle ------------------------------------------------------------------
# Counting by list removal and LCS by subsequence enumeration: slower and
# structurally unlike the implementation under test.


def oracle_tokens(text: str) -> list[str]:
    out: list[str] = []
    current = ""
    for ch in text.lower():
        if ch.isalnum():
            current += ch
        else:
            if current:
                out.append(current)
            current = ""
    if current:
        out.append(current)
    return out


def oracle_overlap_n(cand: list[str], ref: list[str], n: int) -> tuple[int, int, int]:
    cand_grams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
    ref_grams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    pool = list(ref_grams)
    overlap = 0
    for gram in cand_grams:
        if gram in pool:
            pool.remove(gram)
            overlap += 1
    return overlap, len(cand_grams), len(ref_grams)


def _is_subsequence(sub: list[str], seq: list[str]) -> bool:
    it = iter(seq)
    return all(any(x == y for y in it) for x in sub)


def oracle_lcs(a: list[str], b: list[str]) -> int:
    best = 0
    for mask in range(1 << len(a)):
        sub = [a[i] for i in range(len(a)) if mask >> i & 1]
        if len(sub) > best and _is_subsequence(sub, b):
            best = len(sub)
    return best


def oracle_scores(overlap: int, cand_total: int, ref_total: int) -> tuple[float, float, float]:
    p = overlap / cand_total if cand_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


# --- tests -------------------------------------------------------------------


class TestTokenize:
    def test_lowercases_and_splits_on_nonalnum(self):
        assert tokenize("The cat-sat, twice!") == ["the", "cat", "sat", "twice"]

    def test_lowercase_can_be_disabled(self):
        assert tokenize("The Cat", lowercase=False) == ["The", "Cat"]

    def test_stopwords_filtered(self):
        assert tokenize("the cat sat", stopwords=frozenset({"the"})) == ["cat", "sat"]

    def test_stemmer_applied(self):
        out = tokenize("cats sitting", stemmer=lambda t: t.rstrip("s"))
        assert out == ["cat", "sitting"]


class TestKnownValues:
    def test_identical_texts_score_one(self):
        scores = score_pair("the cat sat", "the cat sat")
        for variant in scores.values():
            assert variant.precision == variant.recall == variant.f1 == 1.0

    def test_disjoint_texts_score_zero(self):
        scores = score_pair("aa bb", "cc dd")
        for variant in scores.values():
            assert variant.f1 == 0.0

    def test_two_thirds_overlap(self):
        scores = rouge_n("the cat sat", "the cat ran", 1)
        assert display_value(scores.f1) == "66.67"
        assert scores.f1 == pytest.approx(2 / 3, abs=1e-12)

    def test_empty_candidate(self):
        scores = rouge_n("", "the cat", 1)
        assert scores == RougeScores(0.0, 0.0, 0.0)

    def test_rouge2_counts_bigrams(self):
        scores = rouge_n("a b c", "a b d", 2)
        assert scores.precision == pytest.approx(1 / 2)

    def test_clipping_limits_repeats(self):
        # candidate repeats "the" three times, reference has it once
        scores = rouge_n("the the the", "the cat", 1)
        assert scores.precision == pytest.approx(1 / 3)
        assert scores.recall == pytest.approx(1 / 2)

    def test_rouge_l_known_value(self):
        scores = rouge_l("a c b", "a b c")
        assert scores.precision == pytest.approx(2 / 3)

    def test_invalid_n_rejected(self):
        with pytest.raises(ValueError):
            rouge_n("a", "a", 0)


WORDS5 = ["aa", "bb", "cc", "dd", "ee"]


class TestOracleEquivalence:
    def test_random_pairs_match_oracle(self):
        rng = random.Random(1789)
        for _ in range(2000):
            cand = " ".join(rng.choices(WORDS5, k=rng.randint(0, 8)))
            ref = " ".join(rng.choices(WORDS5, k=rng.randint(0, 8)))
            mine = score_pair(cand, ref)
            cand_t, ref_t = oracle_tokens(cand), oracle_tokens(ref)
            for n in (1, 2):
                expected = oracle_scores(*oracle_overlap_n(cand_t, ref_t, n))
                got = mine[f"rouge{n}"]
                assert got.precision == pytest.approx(expected[0], abs=1e-12)
                assert got.recall == pytest.approx(expected[1], abs=1e-12)
                assert got.f1 == pytest.approx(expected[2], abs=1e-12)
            lcs = oracle_lcs(cand_t, ref_t)
            expected = oracle_scores(lcs, len(cand_t), len(ref_t))
            assert mine["rougeL"].f1 == pytest.approx(expected[2], abs=1e-12)

    @given(
        st.lists(st.sampled_from(WORDS5), max_size=8),
        st.lists(st.sampled_from(WORDS5), max_size=8),
    )
    @settings(max_examples=300, deadline=None)
    def test_property_oracle_equivalence(self, cand_words, ref_words):
        cand, ref = " ".join(cand_words), " ".join(ref_words)
        got = rouge_l(cand, ref)
        lcs = oracle_lcs(cand_words, ref_words)
        expected = oracle_scores(lcs, len(cand_words), len(ref_words))
        assert got.f1 == pytest.approx(expected[2], abs=1e-12)


class TestCorpus:
    def test_mean_of_per_pair_scores(self):
        pairs = [("the cat sat", "the cat ran"), ("a b", "a b")]
        corpus = corpus_rouge(pairs)
        singles = [score_pair(c, r) for c, r in pairs]
        for variant in ("rouge1", "rouge2", "rougeL"):
            expected = sum(s[variant].f1 for s in singles) / 2
            assert corpus[variant].f1 == pytest.approx(expected, abs=1e-12)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            corpus_rouge([])

    def test_display_format(self):
        assert display_value(0.62375) == "62.38"
        assert display_value(1.0) == "100.00"
