"""Masked-context consistency scoring for summaries.

Keywords selected from a summary are masked out of the source; the score is
the mean drop in the summary keywords' positional log-probabilities between
the original and the masked source. A summary whose keywords are grounded
in the source loses probability mass when they are hidden, so higher is
more consistent.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .annotate import (
    Gazetteer,
    KeywordPolicy,
    Lexicon,
    WordSpan,
    annotate,
    select_keywords,
    tokenize_words,
)
from .errors import DataError, NoKeywordsError
from .scoring import DEFAULT_MASK, ScoreResponse, Scorer, validate_response

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MaskedSpan:
    """One masked word: its original text and offset in the masked text."""

    original: str
    offset: int


@dataclass(frozen=True)
class MaskedDocument:
    """A source with keyword occurrences replaced by the mask token."""

    text: str
    mask_token: str
    masked: tuple[MaskedSpan, ...]


def build_masked_document(
    source: str,
    keywords: list[WordSpan] | list[str],
    mask_token: str = DEFAULT_MASK,
) -> MaskedDocument:
    """Replace whole-word occurrences of the keywords, case-insensitively.

    Every occurrence of every keyword is replaced; all other characters,
    including whitespace, are untouched.
    """
    wanted = {
        (k.text if isinstance(k, WordSpan) else k).lower()
        for k in keywords
    }
    wanted.discard("")
    pieces: list[str] = []
    spans: list[MaskedSpan] = []
    cursor = 0
    offset = 0
    for word in tokenize_words(source):
        if word.text.lower() not in wanted:
            continue
        gap = source[cursor : word.start]
        pieces.append(gap)
        offset += len(gap)
        spans.append(MaskedSpan(word.text, offset))
        pieces.append(mask_token)
        offset += len(mask_token)
        cursor = word.end
    pieces.append(source[cursor:])
    return MaskedDocument("".join(pieces), mask_token, tuple(spans))


def unmask(masked: MaskedDocument) -> str:
    """Reconstruct the original source from a masked document."""
    text = masked.text
    mask = masked.mask_token
    pieces: list[str] = []
    cursor = 0
    for span in masked.masked:
        if text[span.offset : span.offset + len(mask)] != mask:
            raise DataError(f"no mask token at offset {span.offset}")
        pieces.append(text[cursor : span.offset])
        pieces.append(span.original)
        cursor = span.offset + len(mask)
    pieces.append(text[cursor:])
    return "".join(pieces)


def positional_scores(scorer: Scorer, context: str, summary: str) -> ScoreResponse:
    """Score the summary tokens against a context, validating the reply."""
    response = scorer.score(context, summary)
    result = validate_response(response.tokens, response.logprobs, response.model_id)
    if "".join(result.tokens) != summary:
        raise DataError("scorer tokens do not concatenate to the summary")
    return result


@dataclass(frozen=True)
class KeywordScore:
    """Positional scores of one keyword's first token, both contexts."""

    word: str
    token: str
    score_x: float
    score_m: float

    @property
    def delta(self) -> float:
        return self.score_x - self.score_m


@dataclass(frozen=True)
class CoCoResult:
    """Outcome of consistency scoring for one (source, summary) pair."""

    keywords: tuple[KeywordScore, ...]
    n: int
    score_x_mean: float
    score_m_mean: float
    coco: float
    model_id: str
    dropped: tuple[str, ...] = field(default_factory=tuple)


def _first_token_index(tokens: tuple[str, ...], char_start: int) -> int | None:
    """Index of the token whose span covers char_start, if usable.

    The keyword must begin at the token start, allowing only leading
    whitespace inside the token (tokenizers attach a space to word-initial
    tokens). A keyword glued to the tail of a larger token is not scoreable.
    """
    offset = 0
    for i, token in enumerate(tokens):
        end = offset + len(token)
        if offset <= char_start < end:
            lead = token[: char_start - offset]
            if lead == "" or lead.isspace():
                return i
            return None
        offset = end
    return None


def coco_score(
    scorer: Scorer,
    source: str,
    summary: str,
    policy: KeywordPolicy,
    lexicon: Lexicon,
    gazetteer: Gazetteer,
    mask_token: str = DEFAULT_MASK,
) -> CoCoResult:
    """Score one summary against its source.

    Raises NoKeywordsError when the policy selects nothing scoreable, so
    callers can decide whether to skip or fail.
    """
    if not summary.strip():
        raise NoKeywordsError("summary is empty")
    words = tokenize_words(summary)
    annotations = annotate(words, lexicon, gazetteer)
    keywords = select_keywords(annotations, policy)
    if not keywords:
        raise NoKeywordsError(f"policy {policy.label} selected no keywords")

    masked = build_masked_document(source, keywords, mask_token)
    response_x = positional_scores(scorer, source, summary)
    response_m = positional_scores(scorer, masked.text, summary)
    if response_x.tokens != response_m.tokens:
        raise DataError("scorer tokenized the summary inconsistently")

    scored: list[KeywordScore] = []
    dropped: list[str] = []
    for word in keywords:
        index = _first_token_index(response_x.tokens, word.start)
        if index is None:
            dropped.append(word.text)
            logger.info("keyword %r has no scoreable first token; dropped", word.text)
            continue
        scored.append(
            KeywordScore(
                word=word.text,
                token=response_x.tokens[index],
                score_x=response_x.logprobs[index],
                score_m=response_m.logprobs[index],
            )
        )
    if not scored:
        raise NoKeywordsError("no keyword had a scoreable first token")

    n = len(scored)
    sum_x = sum(k.score_x for k in scored)
    sum_m = sum(k.score_m for k in scored)
    return CoCoResult(
        keywords=tuple(scored),
        n=n,
        score_x_mean=sum_x / n,
        score_m_mean=sum_m / n,
        coco=(sum_x - sum_m) / n,
        model_id=response_x.model_id,
        dropped=tuple(dropped),
    )
