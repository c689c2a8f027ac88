"""ROUGE-1, ROUGE-2 and ROUGE-L implemented from first principles.

Texts are lowercased and split on non-alphanumeric characters. N-gram
variants use clipped counts; the L variant uses the longest common
subsequence. Corpus scores are unweighted means of per-pair scores.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from statistics import fmean
from typing import Callable, Iterable, Sequence

# alphanumeric runs only; underscore is not a word character here
_WORD = re.compile(r"[^\W_]+", re.UNICODE)

VARIANTS = ("rouge1", "rouge2", "rougeL")


@dataclass(frozen=True)
class RougeScores:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, candidate_total: int, reference_total: int) -> "RougeScores":
        precision = overlap / candidate_total if candidate_total else 0.0
        recall = overlap / reference_total if reference_total else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        return cls(precision, recall, f1)


def tokenize(
    text: str,
    lowercase: bool = True,
    stopwords: frozenset[str] | set[str] | None = None,
    stemmer: Callable[[str], str] | None = None,
) -> list[str]:
    """Split into comparison units; filtering and stemming are optional."""
    if lowercase:
        text = text.lower()
    tokens = _WORD.findall(text)
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    if stemmer is not None:
        tokens = [stemmer(t) for t in tokens]
    return tokens


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int, **tokenize_args) -> RougeScores:
    """Clipped n-gram overlap scores."""
    if n < 1:
        raise ValueError("n must be at least 1")
    cand = _ngrams(tokenize(candidate, **tokenize_args), n)
    ref = _ngrams(tokenize(reference, **tokenize_args), n)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    return RougeScores.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Dynamic-programming LCS with a rolling row."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: str, reference: str, **tokenize_args) -> RougeScores:
    """Longest-common-subsequence scores."""
    cand = tokenize(candidate, **tokenize_args)
    ref = tokenize(reference, **tokenize_args)
    lcs = _lcs_length(cand, ref)
    return RougeScores.from_counts(lcs, len(cand), len(ref))


def score_pair(candidate: str, reference: str, **tokenize_args) -> dict[str, RougeScores]:
    return {
        "rouge1": rouge_n(candidate, reference, 1, **tokenize_args),
        "rouge2": rouge_n(candidate, reference, 2, **tokenize_args),
        "rougeL": rouge_l(candidate, reference, **tokenize_args),
    }


def corpus_rouge(
    pairs: Iterable[tuple[str, str]], **tokenize_args
) -> dict[str, RougeScores]:
    """Unweighted mean of per-pair scores for every variant."""
    per_pair = [score_pair(c, r, **tokenize_args) for c, r in pairs]
    if not per_pair:
        raise ValueError("corpus_rouge needs at least one pair")
    return {
        variant: RougeScores(
            precision=fmean(p[variant].precision for p in per_pair),
            recall=fmean(p[variant].recall for p in per_pair),
            f1=fmean(p[variant].f1 for p in per_pair),
        )
        for variant in VARIANTS
    }


def display_value(score: float) -> str:
    """Conventional reporting form: score times 100, two decimals."""
    return f"{score * 100:.2f}"
