"""Corpus-level operations: prompting, probe building, evaluation, cases.

Evaluation rows are computed per document (optionally in a thread pool) and
assembled in corpus order, so serial and parallel runs produce identical
reports. Timestamps appear only inside the provenance block.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .annotate import NOUN_VERB, ONLY_NOUN, Gazetteer, KeywordPolicy, Lexicon
from .bpe import Vocabulary
from .coco import CoCoResult, coco_score
from .corpus import Document
from .errors import DataError, NoKeywordsError
from .openie import annotate_document, extract_triples, filter_triples, select_key_relation
from .prompts import (
    LengthDecision,
    PromptedDocument,
    SenexMode,
    SkipReport,
    build_prompted_source,
    build_senex_dataset,
    filter_by_length,
    serialize_relation,
)
from .rouge import RougeScores, display_value, score_pair
from .scoring import (
    DEFAULT_MASK,
    BuiltinScorer,
    RemoteScorer,
    Scorer,
    UniformScorer,
)

EVAL_POLICIES: tuple[KeywordPolicy, ...] = (ONLY_NOUN, NOUN_VERB)
POLICY_TITLES = {"only_noun": "Only Noun", "noun_verb": "Noun+Verb"}

_WORDISH = re.compile(r"[^\W_]+", re.UNICODE)


def config_digest(settings: dict) -> str:
    """Stable hash of run semantics; execution details stay out of it."""
    canonical = json.dumps(settings, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def file_digest(paths: Iterable[str | Path]) -> str:
    digest = hashlib.sha256()
    for path in paths:
        digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def build_scorer(
    kind: str,
    vocab: Vocabulary,
    alpha: float = 1.0,
    mask_token: str = DEFAULT_MASK,
    url: str | None = None,
    timeout: float = 30.0,
    max_inflight: int = 8,
) -> Scorer:
    if kind == "builtin":
        return BuiltinScorer(vocab, alpha=alpha, mask_token=mask_token)
    if kind == "uniform":
        return UniformScorer(vocab, mask_token=mask_token)
    if kind == "remote":
        if not url:
            raise DataError("remote scorer needs an endpoint URL")
        return RemoteScorer(url, timeout=timeout, max_inflight=max_inflight)
    raise DataError(f"unknown scorer kind {kind!r}")


@dataclass
class PromptReport:
    """Outcome of a prompting run over a corpus."""

    total: int = 0
    prompted: list[str] = field(default_factory=list)
    unprompted: list[tuple[str, str]] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)

    @property
    def kept(self) -> int:
        return self.total - len(self.dropped)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "prompted": list(self.prompted),
            "unprompted": [{"id": i, "reason": r} for i, r in self.unprompted],
            "dropped_by_length": list(self.dropped),
        }


def run_prompt(
    documents: Sequence[Document],
    lexicon: Lexicon,
    gazetteer: Gazetteer,
    relation_source: str = "target_text",
    whitelist: frozenset[str] | set[str] | None = None,
    length_limit: int | None = 800,
    count_prompt: bool = True,
    unit: str = "words",
    vocab: Vocabulary | None = None,
) -> tuple[list[Document], PromptReport]:
    """Attach one key-relation prompt per document where one can be found."""
    if relation_source not in ("target_text", "source_text"):
        raise DataError(f"unknown relation source {relation_source!r}")
    report = PromptReport(total=len(documents))
    staged: list[Document | PromptedDocument] = []
    for doc in documents:
        text = doc.target if relation_source == "target_text" else doc.source
        if not text.strip():
            report.unprompted.append((doc.id, "empty relation source"))
            staged.append(doc)
            continue
        annotated = annotate_document(text, lexicon, gazetteer)
        triples = [t for sentence in annotated for t in extract_triples(sentence)]
        if whitelist is not None:
            triples = filter_triples(triples, frozenset(whitelist), annotated)
        best = select_key_relation(triples)
        if best is None:
            report.unprompted.append((doc.id, "no relation found"))
            staged.append(doc)
            continue
        prompt = serialize_relation(best)
        report.prompted.append(doc.id)
        staged.append(
            PromptedDocument(
                document=doc,
                triple=best,
                prompt=prompt,
                modified_source=build_prompted_source(doc.source, best),
            )
        )
    if length_limit is not None:
        kept, decisions = filter_by_length(
            staged, limit=length_limit, with_prompt=count_prompt, unit=unit, vocab=vocab
        )
        report.dropped = [d.document.id for d in decisions if not d.kept]
    else:
        kept = staged
    out: list[Document] = []
    for item in kept:
        if isinstance(item, PromptedDocument):
            doc = item.document
            triple = item.triple
            out.append(
                Document(
                    id=doc.id,
                    source=item.modified_source,
                    target=doc.target,
                    prompt=item.prompt,
                    relation={
                        "subject": triple.subject.text,
                        "relation": triple.relation.text,
                        "object": triple.object.text,
                    },
                    extra=dict(doc.extra),
                )
            )
        else:
            out.append(item)
    return out, report


def run_senex(
    documents: Sequence[Document],
    mode: SenexMode | str,
    seed: int,
    vocab: Vocabulary,
    length_limit: int | None = None,
    unit: str = "words",
) -> tuple[list[Document], SkipReport, list[LengthDecision]]:
    """Build a probe dataset, optionally applying the length filter."""
    out, report = build_senex_dataset(list(documents), mode, seed, vocab)
    decisions: list[LengthDecision] = []
    if length_limit is not None:
        kept, decisions = filter_by_length(
            list(out), limit=length_limit, with_prompt=True, unit=unit, vocab=vocab
        )
        out = [d for d in kept if isinstance(d, Document)]
    return out, report, decisions


@dataclass(frozen=True)
class CocoCell:
    """Consistency score of one row under one keyword policy."""

    value: float | None
    n_keywords: int
    skipped: bool
    reason: str | None


@dataclass
class EvalRow:
    id: str
    status: str  # "ok" or "missing"
    rouge: dict[str, RougeScores] | None
    coco: dict[str, CocoCell]


@dataclass
class Provenance:
    config_hash: str
    vocab_hash: str
    model_id: str
    created_at: str
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "vocab_hash": self.vocab_hash,
            "model_id": self.model_id,
            "created_at": self.created_at,
            "version": self.version,
        }


@dataclass
class EvalReport:
    rows: list[EvalRow]
    aggregates: dict
    counts: dict
    provenance: Provenance

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "id": row.id,
                    "status": row.status,
                    "rouge": (
                        {
                            variant: {
                                "precision": s.precision,
                                "recall": s.recall,
                                "f1": s.f1,
                            }
                            for variant, s in row.rouge.items()
                        }
                        if row.rouge is not None
                        else None
                    ),
                    "coco": {
                        policy: {
                            "value": cell.value,
                            "n_keywords": cell.n_keywords,
                            "skipped": cell.skipped,
                            "reason": cell.reason,
                        }
                        for policy, cell in row.coco.items()
                    },
                }
                for row in self.rows
            ],
            "aggregates": self.aggregates,
            "counts": self.counts,
            "provenance": self.provenance.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        header = ["id", "status"]
        for variant in ("rouge1", "rouge2", "rougeL"):
            header += [f"{variant}_precision", f"{variant}_recall", f"{variant}_f1"]
        for policy in EVAL_POLICIES:
            header += [f"coco_{policy.name}", f"keywords_{policy.name}"]
        writer.writerow(header)
        for row in self.rows:
            cells: list[str] = [row.id, row.status]
            if row.rouge is None:
                cells += [""] * 9
            else:
                for variant in ("rouge1", "rouge2", "rougeL"):
                    s = row.rouge[variant]
                    cells += [repr(s.precision), repr(s.recall), repr(s.f1)]
            for policy in EVAL_POLICIES:
                cell = row.coco.get(policy.name)
                if cell is None or cell.value is None:
                    cells += ["", "0" if cell is None else str(cell.n_keywords)]
                else:
                    cells += [repr(cell.value), str(cell.n_keywords)]
            writer.writerow(cells)
        return buffer.getvalue()


def _eval_one(
    doc: Document,
    summary: str | None,
    scorer: Scorer,
    lexicon: Lexicon,
    gazetteer: Gazetteer,
    mask_token: str,
) -> EvalRow:
    if summary is None:
        return EvalRow(
            id=doc.id,
            status="missing",
            rouge=None,
            coco={p.name: CocoCell(None, 0, True, "missing candidate") for p in EVAL_POLICIES},
        )
    rouge = score_pair(summary, doc.require_target())
    coco: dict[str, CocoCell] = {}
    for policy in EVAL_POLICIES:
        try:
            result: CoCoResult = coco_score(
                scorer, doc.source, summary, policy, lexicon, gazetteer, mask_token
            )
            coco[policy.name] = CocoCell(result.coco, result.n, False, None)
        except NoKeywordsError as exc:
            coco[policy.name] = CocoCell(None, 0, True, str(exc))
    return EvalRow(id=doc.id, status="ok", rouge=rouge, coco=coco)


def run_eval(
    documents: Sequence[Document],
    candidates: dict[str, str],
    scorer: Scorer,
    lexicon: Lexicon,
    gazetteer: Gazetteer,
    mask_token: str = DEFAULT_MASK,
    workers: int = 1,
    config_hash: str = "",
    vocab_hash: str = "",
) -> EvalReport:
    """Score every candidate against its document, in corpus order."""
    if workers < 1:
        raise DataError("workers must be at least 1")
    ids = {doc.id for doc in documents}
    unknown = sorted(set(candidates) - ids)
    if unknown:
        raise DataError(f"candidates reference unknown document ids: {unknown[:5]}")

    def work(doc: Document) -> EvalRow:
        return _eval_one(doc, candidates.get(doc.id), scorer, lexicon, gazetteer, mask_token)

    if workers == 1:
        rows = [work(doc) for doc in documents]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(work, documents))

    evaluated = [r for r in rows if r.status == "ok"]
    aggregates: dict = {"rouge": {}, "rouge_display": {}, "coco": {}}
    for variant in ("rouge1", "rouge2", "rougeL"):
        scores = [r.rouge[variant] for r in evaluated if r.rouge is not None]
        if scores:
            mean = RougeScores(
                precision=sum(s.precision for s in scores) / len(scores),
                recall=sum(s.recall for s in scores) / len(scores),
                f1=sum(s.f1 for s in scores) / len(scores),
            )
        else:
            mean = RougeScores(0.0, 0.0, 0.0)
        aggregates["rouge"][variant] = {
            "precision": mean.precision,
            "recall": mean.recall,
            "f1": mean.f1,
        }
        aggregates["rouge_display"][variant] = {
            "precision": display_value(mean.precision),
            "recall": display_value(mean.recall),
            "f1": display_value(mean.f1),
        }
    skipped_ids: dict[str, list[str]] = {}
    for policy in EVAL_POLICIES:
        values = [
            r.coco[policy.name].value
            for r in evaluated
            if r.coco[policy.name].value is not None
        ]
        skipped_ids[policy.name] = [
            r.id for r in evaluated if r.coco[policy.name].skipped
        ]
        mean = sum(values) / len(values) if values else None
        aggregates["coco"][policy.name] = {
            "title": POLICY_TITLES[policy.name],
            "mean": mean,
            "display": f"{mean:.4f}" if mean is not None else "",
            "evaluated": len(values),
            "skipped": len(skipped_ids[policy.name]),
        }
    counts = {
        "documents": len(documents),
        "evaluated": len(evaluated),
        "missing": [r.id for r in rows if r.status == "missing"],
        "coco_skipped": skipped_ids,
    }
    provenance = Provenance(
        config_hash=config_hash,
        vocab_hash=vocab_hash,
        model_id=getattr(scorer, "model_id", "unknown"),
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    return EvalReport(rows=rows, aggregates=aggregates, counts=counts, provenance=provenance)


@dataclass
class CaseBlock:
    """One side-by-side comparison rendered into the cases report."""

    id: str
    relation_prompt: str
    gold: str
    without_relation: str
    with_relation: str
    contains_keywords: bool


def _cell(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ")


def _relation_words(doc: Document) -> list[str]:
    if doc.relation is None:
        return []
    joined = " ".join(doc.relation[k] for k in ("subject", "relation", "object"))
    return _WORDISH.findall(joined.lower())


def run_cases(
    documents: Sequence[Document],
    baseline: dict[str, str],
    prompted: dict[str, str],
    ids: Sequence[str] | None = None,
) -> tuple[str, list[CaseBlock]]:
    """Render side-by-side case tables for the requested document ids."""
    by_id = {doc.id: doc for doc in documents}
    if ids is None:
        chosen = [d.id for d in documents if d.id in baseline and d.id in prompted]
    else:
        chosen = list(ids)
        for doc_id in chosen:
            if doc_id not in by_id:
                raise DataError(f"unknown document id {doc_id!r}")
            if doc_id not in baseline or doc_id not in prompted:
                raise DataError(f"id {doc_id!r} missing from one of the candidate sets")
    if not chosen:
        raise DataError("no document ids shared by both candidate sets")
    blocks: list[CaseBlock] = []
    lines: list[str] = ["# Case comparison", ""]
    for doc_id in chosen:
        doc = by_id[doc_id]
        rel_line = doc.prompt or (serialize_relation(doc.relation) if doc.relation else "(none)")
        without = baseline[doc_id]
        with_rel = prompted[doc_id]
        words = _relation_words(doc)
        summary_words = set(_WORDISH.findall(with_rel.lower()))
        contains = bool(words) and all(w in summary_words for w in words)
        blocks.append(
            CaseBlock(
                id=doc_id,
                relation_prompt=rel_line,
                gold=doc.target,
                without_relation=without,
                with_relation=with_rel,
                contains_keywords=contains,
            )
        )
        lines += [
            f"## {doc_id}",
            "",
            "| | |",
            "| --- | --- |",
            f"| Rel: | {_cell(rel_line)} |",
            f"| Gold: | {_cell(doc.target)} |",
            f"| No relation: | {_cell(without)} |",
            f"| With relation: | {_cell(with_rel)} |",
            "",
            f"Relation words all appear in the prompted summary: {'yes' if contains else 'no'}",
            "",
        ]
    return "\n".join(lines), blocks
