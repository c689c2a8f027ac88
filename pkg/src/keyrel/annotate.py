"""Deterministic word tokenization, POS tagging and gazetteer NER.

The taggers are rule- and lookup-based so that annotation is reproducible
without model downloads: a lexicon TSV drives POS tags with a few suffix
fallbacks, and a gazetteer TSV drives entity tags by longest surface match.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

from .errors import DataError, ParseError

POS_TAGS = frozenset(
    {"NOUN", "PRON", "VERB", "ADJ", "ADV", "ADP", "DET", "NUM", "PUNCT", "PART", "CONJ", "X"}
)
NER_TAGS = frozenset({"PERSON", "TITLE", "COUNTRY", "ORG", "LOC", "DATE", "NONE"})


@dataclass(frozen=True)
class WordSpan:
    """One word with its character span in the annotated text."""

    text: str
    start: int
    end: int
    index: int


@dataclass(frozen=True)
class Annotation:
    """A word paired with exactly one POS tag and one entity tag."""

    word: WordSpan
    pos: str
    ner: str


def tokenize_words(text: str, base_offset: int = 0) -> list[WordSpan]:
    """Split text into words on whitespace; punctuation chars stand alone.

    A word is either a maximal run of alphanumeric characters or a single
    non-alphanumeric, non-space character. Spans cover every non-space
    character of the input exactly once, in order.
    """
    words: list[WordSpan] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalnum():
            j = i + 1
            while j < n and text[j].isalnum():
                j += 1
        else:
            j = i + 1
        words.append(WordSpan(text[i:j], base_offset + i, base_offset + j, len(words)))
        i = j
    return words


def _read_tsv(path: str | Path, valid_tags: frozenset[str], kind: str) -> dict[str, str]:
    """Read `surface<TAB>TAG` lines; '#' comments and blank lines ignored."""
    path = Path(path)
    entries: dict[str, str] = {}
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError(f"{path}:{lineno}: expected surface<TAB>TAG")
            surface, tag = parts
            if tag not in valid_tags:
                raise ParseError(f"{path}:{lineno}: unknown {kind} tag {tag!r}")
            entries[surface] = tag
    return entries


class Lexicon:
    """Case-insensitive word-to-POS lookup table."""

    def __init__(self, entries: dict[str, str] | None = None):
        self.entries = {k.lower(): v for k, v in (entries or {}).items()}
        bad = set(self.entries.values()) - POS_TAGS
        if bad:
            raise DataError(f"unknown POS tags in lexicon: {sorted(bad)}")

    @classmethod
    def from_file(cls, path: str | Path) -> "Lexicon":
        return cls(_read_tsv(path, POS_TAGS, "POS"))

    def get(self, word: str) -> str | None:
        return self.entries.get(word.lower())


class Gazetteer:
    """Longest-match entity lookup over word sequences."""

    def __init__(self, entries: dict[str, str] | None = None, case_sensitive: bool = True):
        self.case_sensitive = case_sensitive
        self._table: dict[tuple[str, ...], str] = {}
        for surface, tag in (entries or {}).items():
            if tag not in NER_TAGS or tag == "NONE":
                raise DataError(f"unknown entity tag {tag!r} for {surface!r}")
            key = tuple(w.text for w in tokenize_words(surface))
            if not key:
                raise DataError(f"empty gazetteer surface for tag {tag!r}")
            if not case_sensitive:
                key = tuple(w.lower() for w in key)
            self._table[key] = tag
        self._max_len = max((len(k) for k in self._table), default=0)

    @classmethod
    def from_file(cls, path: str | Path, case_sensitive: bool = True) -> "Gazetteer":
        return cls(_read_tsv(path, NER_TAGS, "entity"), case_sensitive=case_sensitive)

    def tag_words(self, words: Sequence[WordSpan]) -> list[str]:
        """Tag each word; matches are non-overlapping, earliest start first,
        longest surface first on ties."""
        tags = ["NONE"] * len(words)
        texts = [w.text if self.case_sensitive else w.text.lower() for w in words]
        i = 0
        while i < len(words):
            matched = False
            for length in range(min(self._max_len, len(words) - i), 0, -1):
                tag = self._table.get(tuple(texts[i : i + length]))
                if tag is not None:
                    for k in range(i, i + length):
                        tags[k] = tag
                    i += length
                    matched = True
                    break
            if not matched:
                i += 1
        return tags


def _pos_of(word: str, lexicon: Lexicon) -> str:
    if not any(ch.isalnum() for ch in word):
        return "PUNCT"
    if word.isdigit():
        return "NUM"
    tag = lexicon.get(word)
    if tag is not None:
        return tag
    # suffix rules only apply to lowercase words; capitalized unknowns are
    # treated as proper nouns (Sally is not an adverb)
    if word == word.lower():
        if word.endswith("ed") or word.endswith("ing"):
            return "VERB"
        if word.endswith("ly"):
            return "ADV"
    return "NOUN"


def pos_tag(words: Sequence[WordSpan], lexicon: Lexicon) -> list[Annotation]:
    """POS-tag words; entity tags are left as NONE."""
    return [Annotation(w, _pos_of(w.text, lexicon), "NONE") for w in words]


def ner_tag(words: Sequence[WordSpan], gazetteer: Gazetteer) -> list[Annotation]:
    """Entity-tag words; POS tags are left as X (combine via `annotate`)."""
    return [Annotation(w, "X", t) for w, t in zip(words, gazetteer.tag_words(words))]


def annotate(words: Sequence[WordSpan], lexicon: Lexicon, gazetteer: Gazetteer) -> list[Annotation]:
    """Produce the combined annotation: one POS and one entity tag per word."""
    ner = gazetteer.tag_words(words)
    return [Annotation(w, _pos_of(w.text, lexicon), t) for w, t in zip(words, ner)]


@dataclass(frozen=True)
class KeywordPolicy:
    """Selects summary words by POS or entity tag membership."""

    kind: Literal["pos", "ner"]
    tags: frozenset[str] = field(default_factory=frozenset)
    name: str = ""

    def __post_init__(self) -> None:
        valid = POS_TAGS if self.kind == "pos" else NER_TAGS
        if self.kind not in ("pos", "ner"):
            raise DataError(f"unknown policy kind {self.kind!r}")
        unknown = set(self.tags) - valid
        if unknown:
            raise DataError(f"unknown {self.kind} tags in policy: {sorted(unknown)}")
        if not self.tags:
            raise DataError("keyword policy needs at least one tag")

    @property
    def label(self) -> str:
        return self.name or f"{self.kind}:{','.join(sorted(self.tags))}"


ONLY_NOUN = KeywordPolicy("pos", frozenset({"NOUN", "PRON"}), name="only_noun")
NOUN_VERB = KeywordPolicy("pos", frozenset({"NOUN", "PRON", "VERB"}), name="noun_verb")


def parse_policy(spec: str) -> KeywordPolicy:
    """Parse a policy string: a named policy, `pos:TAG,..` or `ner:TAG,..`."""
    lowered = spec.strip().lower()
    if lowered == "only_noun":
        return ONLY_NOUN
    if lowered == "noun_verb":
        return NOUN_VERB
    if ":" in spec:
        kind, _, tags = spec.partition(":")
        kind = kind.strip().lower()
        tag_set = frozenset(t.strip().upper() for t in tags.split(",") if t.strip())
        if kind in ("pos", "ner"):
            return KeywordPolicy(kind, tag_set)  # type: ignore[arg-type]
    raise DataError(
        f"unknown keyword policy {spec!r}; use only_noun, noun_verb, pos:... or ner:..."
    )


def select_keywords(annotations: Iterable[Annotation], policy: KeywordPolicy) -> list[WordSpan]:
    """Words whose configured tag is in the policy set, in text order."""
    if policy.kind == "pos":
        return [a.word for a in annotations if a.pos in policy.tags]
    return [a.word for a in annotations if a.ner in policy.tags]
