"""Rule-based open relation extraction over annotated sentences.

A relation is a verb followed by a maximal run of particles, adpositions and
adverbs. Its subject is the maximal noun phrase immediately to the left and
its object is the entity span or maximal noun phrase immediately to the
right, whichever is longer. Everything operates on surface spans so the
extracted strings are exact slices of the input.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .annotate import Annotation, Gazetteer, Lexicon, WordSpan, annotate, tokenize_words
from .errors import DataError

# Default sentence-terminator stop list: a '.' ending one of these tokens
# does not close a sentence.
DEFAULT_ABBREVIATIONS = frozenset(
    {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "vs.",
        "etc.", "e.g.", "i.e.", "u.s.", "u.k.", "inc.", "ltd.", "co.",
        "no.", "gen.", "col.", "sen.", "rep.", "gov.", "capt.",
    }
)

_TERMINATORS = frozenset(".!?")
_RELATION_TAIL = frozenset({"PART", "ADP", "ADV"})


@dataclass(frozen=True)
class Sentence:
    """One sentence slice; spans partition the source text."""

    text: str
    start: int
    end: int
    index: int


@dataclass(frozen=True)
class Span:
    """A labelled slice of the source text."""

    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Triple:
    """An extracted (subject; relation; object) with provenance spans."""

    subject: Span
    relation: Span
    object: Span
    sentence_index: int
    score: float


@dataclass(frozen=True)
class AnnotatedSentence:
    """A sentence with per-word annotations; word spans are absolute."""

    sentence: Sentence
    annotations: tuple[Annotation, ...]

    @property
    def words(self) -> list[WordSpan]:
        return [a.word for a in self.annotations]


def split_sentences(
    text: str, abbreviations: frozenset[str] | set[str] = DEFAULT_ABBREVIATIONS
) -> list[Sentence]:
    """Split on terminator runs followed by whitespace or end of text.

    Trailing whitespace is attached to the preceding sentence so that the
    spans reconstruct the input exactly. A '.' closing a stop-list token
    (compared case-insensitively) is not a boundary.
    """
    if not text:
        return []
    lowered = {a.lower() for a in abbreviations}
    boundaries: list[int] = []
    n = len(text)
    i = 0
    while i < n:
        if text[i] in _TERMINATORS:
            j = i
            while j + 1 < n and text[j + 1] in _TERMINATORS:
                j += 1
            if j + 1 < n and not text[j + 1].isspace():
                i = j + 1
                continue
            if text[i] == "." and i == j:
                k = i
                while k > 0 and not text[k - 1].isspace():
                    k -= 1
                if text[k : i + 1].lower() in lowered:
                    i += 1
                    continue
            end = j + 1
            while end < n and text[end].isspace():
                end += 1
            boundaries.append(end)
            i = end
        else:
            i += 1
    if not boundaries or boundaries[-1] < n:
        boundaries.append(n)
    sentences: list[Sentence] = []
    start = 0
    for end in boundaries:
        if text[start:end].strip() or not sentences:
            sentences.append(Sentence(text[start:end], start, end, len(sentences)))
        else:
            # whitespace-only remainder: extend the previous sentence
            prev = sentences[-1]
            sentences[-1] = Sentence(text[prev.start : end], prev.start, end, prev.index)
        start = end
    return sentences


def annotate_document(
    text: str,
    lexicon: Lexicon,
    gazetteer: Gazetteer,
    abbreviations: frozenset[str] | set[str] = DEFAULT_ABBREVIATIONS,
) -> list[AnnotatedSentence]:
    """Split into sentences and annotate each; word offsets are absolute."""
    annotated: list[AnnotatedSentence] = []
    for sentence in split_sentences(text, abbreviations):
        words = tokenize_words(sentence.text, base_offset=sentence.start)
        annotated.append(AnnotatedSentence(sentence, tuple(annotate(words, lexicon, gazetteer))))
    return annotated


def _np_ending_at(pos: Sequence[str], j: int) -> tuple[int, int] | None:
    """Maximal DET? ADJ* NOUN+ (or single PRON) ending at index j."""
    if j < 0:
        return None
    if pos[j] == "PRON":
        return (j, j)
    if pos[j] != "NOUN":
        return None
    i = j
    while i > 0 and pos[i - 1] == "NOUN":
        i -= 1
    while i > 0 and pos[i - 1] == "ADJ":
        i -= 1
    if i > 0 and pos[i - 1] == "DET":
        i -= 1
    return (i, j)


def _np_starting_at(pos: Sequence[str], i: int) -> tuple[int, int] | None:
    """Maximal DET? ADJ* NOUN+ (or single PRON) starting at index i."""
    n = len(pos)
    if i >= n:
        return None
    if pos[i] == "PRON":
        return (i, i)
    j = i
    if pos[j] == "DET":
        j += 1
    while j < n and pos[j] == "ADJ":
        j += 1
    if j >= n or pos[j] != "NOUN":
        return None
    while j + 1 < n and pos[j + 1] == "NOUN":
        j += 1
    return (i, j)


def _entity_run_at(ner: Sequence[str], i: int) -> tuple[int, int] | None:
    """Maximal run of one entity tag starting at index i."""
    if i >= len(ner) or ner[i] == "NONE":
        return None
    j = i
    while j + 1 < len(ner) and ner[j + 1] == ner[i]:
        j += 1
    return (i, j)


def _word_slice(words: Sequence[WordSpan], lo: int, hi: int, text: str, base: int) -> Span:
    start = words[lo].start
    end = words[hi].end
    return Span(text[start - base : end - base], start, end)


def extract_triples(annotated: AnnotatedSentence) -> list[Triple]:
    """All pattern matches in one sentence, in subject order."""
    anns = annotated.annotations
    words = [a.word for a in anns]
    pos = [a.pos for a in anns]
    ner = [a.ner for a in anns]
    sent = annotated.sentence
    triples: list[Triple] = []
    for v, tag in enumerate(pos):
        if tag != "VERB":
            continue
        rel_end = v
        while rel_end + 1 < len(pos) and pos[rel_end + 1] in _RELATION_TAIL:
            rel_end += 1
        subject = _np_ending_at(pos, v - 1)
        if subject is None:
            continue
        obj_start = rel_end + 1
        entity = _entity_run_at(ner, obj_start)
        phrase = _np_starting_at(pos, obj_start)
        candidates = [c for c in (entity, phrase) if c is not None]
        if not candidates:
            continue
        obj = max(candidates, key=lambda c: c[1] - c[0])
        rel_words = rel_end - v + 1
        triples.append(
            Triple(
                subject=_word_slice(words, subject[0], subject[1], sent.text, sent.start),
                relation=_word_slice(words, v, rel_end, sent.text, sent.start),
                object=_word_slice(words, obj[0], obj[1], sent.text, sent.start),
                sentence_index=sent.index,
                score=rel_words / (rel_words + 1),
            )
        )
    return triples


def filter_triples(
    triples: Sequence[Triple],
    whitelist: set[str] | frozenset[str],
    annotations: Sequence[AnnotatedSentence],
) -> list[Triple]:
    """Keep triples whose subject or object overlaps a whitelisted entity."""
    unknown = set(whitelist) - {"PERSON", "TITLE", "COUNTRY", "ORG", "LOC", "DATE"}
    if unknown:
        raise DataError(f"unknown entity tags in whitelist: {sorted(unknown)}")
    by_index = {a.sentence.index: a for a in annotations}
    kept: list[Triple] = []
    for triple in triples:
        annotated = by_index.get(triple.sentence_index)
        if annotated is None:
            raise DataError(f"no annotations for sentence {triple.sentence_index}")
        spans = (triple.subject, triple.object)
        hit = any(
            a.ner in whitelist and span.start <= a.word.start and a.word.end <= span.end
            for a in annotated.annotations
            for span in spans
        )
        if hit:
            kept.append(triple)
    return kept


def select_key_relation(triples: Sequence[Triple]) -> Triple | None:
    """Highest score wins; ties go to the earliest sentence, then the
    longest object span, then extraction order."""
    best: Triple | None = None
    for triple in triples:
        if best is None:
            best = triple
            continue
        key = (triple.score, -triple.sentence_index, triple.object.end - triple.object.start)
        best_key = (best.score, -best.sentence_index, best.object.end - best.object.start)
        if key > best_key:
            best = triple
    return best
