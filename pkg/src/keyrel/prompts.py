"""Prompt construction, probe datasets and length filtering.

The key-relation prompt serializes a triple as a dict literal on its own
line ahead of the source. Each triple field keeps a leading space so the
values read like tokenizer pieces. Probe datasets pair a source with its
own first sentence as target, optionally hinted with tokens of that
sentence.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from .bpe import Vocabulary, encode
from .corpus import Document
from .errors import DataError
from .openie import Triple, split_sentences

PROMPT_PREFIX = "Key relation: "
TLDR_SUFFIX = "\nTL;DR:"


def _quote(value: str) -> str:
    """Dict-literal quoting: single quotes unless the value contains one."""
    if "'" in value:
        if '"' not in value:
            return f'"{value}"'
        escaped = value.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"
    return f"'{value}'"


def serialize_relation(triple: Triple | dict[str, str]) -> str:
    """Render one triple as a `Key relation: {...}` line (no newline)."""
    if isinstance(triple, Triple):
        parts = {
            "subject": triple.subject.text,
            "relation": triple.relation.text,
            "object": triple.object.text,
        }
    else:
        parts = {k: triple[k] for k in ("subject", "relation", "object")}
    body = ", ".join(f"'{key}': {_quote(' ' + value)}" for key, value in parts.items())
    return f"{PROMPT_PREFIX}{{{body}}}"


def build_prompted_source(source: str, triple: Triple | dict[str, str]) -> str:
    """Prepend the serialized relation to the source on its own line."""
    return serialize_relation(triple) + "\n" + source


def strip_prompt(modified_source: str) -> tuple[str | None, str]:
    """Undo `build_prompted_source`; returns (prompt line, original source)."""
    first, sep, rest = modified_source.partition("\n")
    if sep and first.startswith(PROMPT_PREFIX):
        return first, rest
    return None, modified_source


def build_tldr_input(doc: Document) -> str:
    """Append the TL;DR cue used for zero-shot summarisation."""
    return doc.source + TLDR_SUFFIX


@dataclass
class PromptedDocument:
    """A document plus its serialized relation and modified source."""

    document: Document
    triple: Triple | dict[str, str]
    prompt: str
    modified_source: str


class SenexMode(str, enum.Enum):
    """Probe variants: plain copy, leading-token hint, sampled-token hint."""

    SENEX1 = "senex1"
    SENEX2 = "senex2"
    SENEX3 = "senex3"


@dataclass
class SkipReport:
    """Documents excluded while building a probe dataset."""

    total: int = 0
    kept: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)


def first_sentence(source: str) -> str:
    sentences = split_sentences(source)
    return sentences[0].text.strip() if sentences else ""


def build_senex_dataset(
    documents: list[Document],
    mode: SenexMode | str,
    seed: int,
    vocab: Vocabulary,
    hint_tokens: int = 3,
) -> tuple[list[Document], SkipReport]:
    """Build a probe dataset whose target is each source's first sentence.

    senex1 keeps sources unchanged; senex2 prefixes the first `hint_tokens`
    tokens of the target; senex3 prefixes `hint_tokens` tokens sampled
    without replacement, in their original order. Documents whose target
    has fewer than `hint_tokens` tokens are skipped and reported.
    """
    mode = SenexMode(mode)
    rng = random.Random(seed)
    report = SkipReport(total=len(documents))
    out: list[Document] = []
    for doc in documents:
        target = first_sentence(doc.source)
        if not target:
            report.skipped.append((doc.id, "empty first sentence"))
            continue
        tokens = encode(vocab, target).tokens
        if len(tokens) < hint_tokens:
            report.skipped.append((doc.id, f"fewer than {hint_tokens} tokens"))
            continue
        if mode is SenexMode.SENEX1:
            hint = None
            source = doc.source
        else:
            if mode is SenexMode.SENEX2:
                chosen = tokens[:hint_tokens]
            else:
                indices = sorted(rng.sample(range(len(tokens)), hint_tokens))
                chosen = [tokens[i] for i in indices]
            hint = "".join(t.text for t in chosen)
            try:
                # byte-level tokens can cut a character in half; such a
                # hint is not valid UTF-8 and cannot be serialized
                hint.encode("utf-8")
            except UnicodeEncodeError:
                report.skipped.append((doc.id, "hint splits a multi-byte character"))
                continue
            source = hint + "\n" + doc.source
        out.append(
            Document(
                id=doc.id,
                source=source,
                target=target,
                prompt=hint,
                extra=dict(doc.extra),
            )
        )
        report.kept += 1
    return out, report


def _wordcount(text: str) -> int:
    return len(text.split())


def _tokencount(text: str, vocab: Vocabulary | None) -> int:
    if vocab is None:
        raise DataError("token-based length filtering needs a vocabulary")
    return len(encode(vocab, text))


@dataclass
class LengthDecision:
    """Outcome of the length filter for one document."""

    document: Document
    length: int
    kept: bool


def filter_by_length(
    items: list[Document | PromptedDocument],
    limit: int = 800,
    with_prompt: bool = False,
    unit: str = "words",
    vocab: Vocabulary | None = None,
) -> tuple[list[Document | PromptedDocument], list[LengthDecision]]:
    """Keep items whose source plus target length is within the limit.

    For prompted documents `with_prompt` selects whether the modified or the
    original source is counted. The limit is inclusive.
    """
    if unit not in ("words", "tokens"):
        raise DataError(f"unknown length unit {unit!r}")
    if limit <= 0:
        raise DataError("length limit must be positive")
    count = _wordcount if unit == "words" else (lambda text: _tokencount(text, vocab))
    kept: list[Document | PromptedDocument] = []
    decisions: list[LengthDecision] = []
    for item in items:
        if isinstance(item, PromptedDocument):
            doc = item.document
            source = item.modified_source if with_prompt else doc.source
        else:
            doc = item
            source = doc.source
        length = count(source) + count(doc.target)
        ok = length <= limit
        decisions.append(LengthDecision(doc, length, ok))
        if ok:
            kept.append(item)
    return kept, decisions
