"""Document records and JSONL corpus files.

A corpus file holds one JSON object per line with fields `id`, `source`,
optional `target`, `prompt` and `relation`. Unknown fields are preserved
opaquely and written back on emit. Candidate files pair `id` with `summary`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import DataError

RELATION_KEYS = ("subject", "relation", "object")
_CORE_FIELDS = {"id", "source", "target", "prompt", "relation"}


@dataclass
class Document:
    """One record: a source text with an optional reference target."""

    id: str
    source: str
    target: str = ""
    prompt: str | None = None
    relation: dict[str, str] | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise DataError("document id must be a non-empty string")
        if not isinstance(self.source, str) or not self.source.strip():
            raise DataError(f"document {self.id!r}: source must be non-empty")
        if self.relation is not None:
            missing = [k for k in RELATION_KEYS if k not in self.relation]
            if missing:
                raise DataError(f"document {self.id!r}: relation lacks {missing}")

    def require_target(self) -> str:
        if not self.target:
            raise DataError(f"document {self.id!r}: target is required here")
        return self.target


def _parse_line(path: Path, lineno: int, line: str) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(record, dict):
        raise DataError(f"{path}:{lineno}: expected a JSON object")
    return record


def ingest_jsonl(path: str | Path) -> list[Document]:
    """Load a corpus; malformed lines and duplicate ids are data errors."""
    path = Path(path)
    documents: list[Document] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = _parse_line(path, lineno, line)
            for key in ("id", "source"):
                if key not in record:
                    raise DataError(f"{path}:{lineno}: missing required field {key!r}")
            doc_id = record["id"]
            if isinstance(doc_id, int):
                doc_id = str(doc_id)
            if not isinstance(doc_id, str):
                raise DataError(f"{path}:{lineno}: id must be a string")
            if doc_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate id {doc_id!r}")
            seen.add(doc_id)
            source = record["source"]
            target = record.get("target", "")
            prompt = record.get("prompt")
            relation = record.get("relation")
            for name, value, types in (
                ("source", source, (str,)),
                ("target", target, (str,)),
                ("prompt", prompt, (str, type(None))),
                ("relation", relation, (dict, type(None))),
            ):
                if not isinstance(value, types):
                    raise DataError(f"{path}:{lineno}: field {name!r} has the wrong type")
            extra = {k: v for k, v in record.items() if k not in _CORE_FIELDS}
            try:
                documents.append(
                    Document(
                        id=doc_id,
                        source=source,
                        target=target,
                        prompt=prompt,
                        relation=relation,
                        extra=extra,
                    )
                )
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return documents


def document_to_record(doc: Document) -> dict:
    record: dict = {"id": doc.id, "source": doc.source, "target": doc.target}
    if doc.prompt is not None:
        record["prompt"] = doc.prompt
    if doc.relation is not None:
        record["relation"] = {k: doc.relation[k] for k in RELATION_KEYS}
    for key, value in doc.extra.items():
        record.setdefault(key, value)
    return record


def emit_jsonl(documents: Iterable[Document], path: str | Path) -> None:
    """Write a corpus; one compact JSON object per line, UTF-8."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for doc in documents:
            handle.write(json.dumps(document_to_record(doc), ensure_ascii=False))
            handle.write("\n")


def ingest_candidates(path: str | Path) -> dict[str, str]:
    """Load candidate summaries keyed by document id."""
    path = Path(path)
    candidates: dict[str, str] = {}
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = _parse_line(path, lineno, line)
            for key in ("id", "summary"):
                if key not in record:
                    raise DataError(f"{path}:{lineno}: missing required field {key!r}")
            doc_id = record["id"]
            if isinstance(doc_id, int):
                doc_id = str(doc_id)
            if not isinstance(doc_id, str) or not isinstance(record["summary"], str):
                raise DataError(f"{path}:{lineno}: id and summary must be strings")
            if doc_id in candidates:
                raise DataError(f"{path}:{lineno}: duplicate id {doc_id!r}")
            candidates[doc_id] = record["summary"]
    return candidates
