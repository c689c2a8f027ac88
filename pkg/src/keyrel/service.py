"""HTTP service exposing the toolkit.

The service loads its resources (vocabulary, lexicon, gazetteer) once at
startup. It also speaks the scorer protocol itself via POST /score, backed
by the built-in scorer, so one instance can serve as a reference scorer
endpoint for another.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .annotate import Gazetteer, Lexicon, parse_policy
from .bpe import Vocabulary, load_vocabulary
from .coco import coco_score
from .corpus import Document, document_to_record
from .errors import DataError, NoKeywordsError, ScorerError
from .pipeline import (
    build_scorer,
    config_digest,
    file_digest,
    run_cases,
    run_eval,
    run_prompt,
    run_senex,
)
from .resources import (
    DEFAULT_GAZETTEER,
    DEFAULT_LEXICON,
    DEFAULT_MERGES,
    DEFAULT_VOCAB,
    default_path,
)
from .rouge import corpus_rouge, display_value, score_pair
from .scoring import DEFAULT_MASK, BuiltinScorer


@dataclass
class ServiceSettings:
    """Filesystem resources and scorer defaults for one service instance."""

    vocab_path: Path | str | None = None
    merges_path: Path | str | None = None
    lexicon_path: Path | str | None = None
    gazetteer_path: Path | str | None = None
    alpha: float = 1.0
    mask_token: str = DEFAULT_MASK

    def resolve(self) -> "ServiceSettings":
        return ServiceSettings(
            vocab_path=Path(self.vocab_path or default_path(DEFAULT_VOCAB)),
            merges_path=Path(self.merges_path or default_path(DEFAULT_MERGES)),
            lexicon_path=Path(self.lexicon_path or default_path(DEFAULT_LEXICON)),
            gazetteer_path=Path(self.gazetteer_path or default_path(DEFAULT_GAZETTEER)),
            alpha=self.alpha,
            mask_token=self.mask_token,
        )


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"
    version: str = __version__


class ScoreRequest(BaseModel):
    context: str
    target: str


class ScoreReply(BaseModel):
    tokens: list[str]
    logprobs: list[float]
    model_id: str


class DocumentModel(BaseModel):
    model_config = ConfigDict(extra="allow")

    id: str
    source: str
    target: str = ""
    prompt: str | None = None
    relation: dict[str, str] | None = None

    def to_document(self) -> Document:
        extra = {
            k: v
            for k, v in (self.model_extra or {}).items()
        }
        return Document(
            id=self.id,
            source=self.source,
            target=self.target,
            prompt=self.prompt,
            relation=self.relation,
            extra=extra,
        )


class CandidateModel(BaseModel):
    id: str
    summary: str


class ScorerSpec(BaseModel):
    kind: Literal["builtin", "uniform", "remote"] = "builtin"
    url: str | None = None
    alpha: float = 1.0
    mask_token: str = DEFAULT_MASK
    timeout: float = 30.0
    max_inflight: int = 8


class RougePair(BaseModel):
    candidate: str
    reference: str


class RougeRequest(BaseModel):
    pairs: list[RougePair] = Field(min_length=1)
    lowercase: bool = True


class RougeTriple(BaseModel):
    precision: float
    recall: float
    f1: float


class RougeReply(BaseModel):
    per_pair: list[dict[str, RougeTriple]]
    corpus: dict[str, RougeTriple]
    display: dict[str, dict[str, str]]


class CocoRequest(BaseModel):
    source: str
    summary: str
    policy: str = "only_noun"
    scorer: ScorerSpec = Field(default_factory=ScorerSpec)


class KeywordScoreModel(BaseModel):
    word: str
    token: str
    score_x: float
    score_m: float


class CocoReply(BaseModel):
    keywords: list[KeywordScoreModel]
    n: int
    score_x_mean: float
    score_m_mean: float
    coco: float
    model_id: str
    dropped: list[str]


class PromptRequest(BaseModel):
    documents: list[DocumentModel]
    relation_source: Literal["target_text", "source_text"] = "target_text"
    whitelist: list[str] | None = None
    length_limit: int | None = 800
    count_prompt: bool = True
    unit: Literal["words", "tokens"] = "words"


class CorpusReply(BaseModel):
    documents: list[dict]
    report: dict


class SenexRequest(BaseModel):
    documents: list[DocumentModel]
    mode: Literal["senex1", "senex2", "senex3"]
    seed: int = 0
    length_limit: int | None = None
    unit: Literal["words", "tokens"] = "words"


class EvalRequest(BaseModel):
    documents: list[DocumentModel]
    candidates: list[CandidateModel]
    scorer: ScorerSpec = Field(default_factory=ScorerSpec)
    workers: int = Field(default=1, ge=1, le=64)


class ProvenanceModel(BaseModel):
    config_hash: str
    vocab_hash: str
    model_id: str
    created_at: str
    version: str


class EvalReply(BaseModel):
    report: dict
    csv: str


class CasesRequest(BaseModel):
    documents: list[DocumentModel]
    baseline: list[CandidateModel]
    prompted: list[CandidateModel]
    ids: list[str] | None = None


class CaseBlockModel(BaseModel):
    id: str
    relation_prompt: str
    gold: str
    without_relation: str
    with_relation: str
    contains_keywords: bool


class CasesReply(BaseModel):
    markdown: str
    blocks: list[CaseBlockModel]


def _documents(models: list[DocumentModel]) -> list[Document]:
    docs = [m.to_document() for m in models]
    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise DataError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
    return docs


def _candidates(models: list[CandidateModel]) -> dict[str, str]:
    table: dict[str, str] = {}
    for model in models:
        if model.id in table:
            raise DataError(f"duplicate candidate id {model.id!r}")
        table[model.id] = model.summary
    return table


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    settings = (settings or ServiceSettings()).resolve()
    app = FastAPI(title="keyrel", version=__version__)

    vocab: Vocabulary = load_vocabulary(settings.vocab_path, settings.merges_path)
    lexicon = Lexicon.from_file(settings.lexicon_path)
    gazetteer = Gazetteer.from_file(settings.gazetteer_path)
    vocab_hash = file_digest([settings.vocab_path, settings.merges_path])
    app.state.settings = settings
    app.state.vocab = vocab

    @app.exception_handler(DataError)
    async def data_error(request: Request, exc: DataError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(NoKeywordsError)
    async def no_keywords(request: Request, exc: NoKeywordsError) -> JSONResponse:
        return JSONResponse(
            status_code=422, content={"detail": str(exc), "error": "no_keywords"}
        )

    @app.exception_handler(ScorerError)
    async def scorer_error(request: Request, exc: ScorerError) -> JSONResponse:
        return JSONResponse(
            status_code=502, content={"detail": str(exc), "error": "scorer"}
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse()

    @app.post("/score", response_model=ScoreReply)
    def score(request: ScoreRequest) -> ScoreReply:
        scorer = BuiltinScorer(vocab, alpha=settings.alpha, mask_token=settings.mask_token)
        response = scorer.score(request.context, request.target)
        return ScoreReply(
            tokens=list(response.tokens),
            logprobs=list(response.logprobs),
            model_id=response.model_id,
        )

    @app.post("/rouge", response_model=RougeReply)
    def rouge(request: RougeRequest) -> RougeReply:
        pairs = [(p.candidate, p.reference) for p in request.pairs]
        per_pair = [
            {
                variant: RougeTriple(
                    precision=s.precision, recall=s.recall, f1=s.f1
                )
                for variant, s in score_pair(c, r, lowercase=request.lowercase).items()
            }
            for c, r in pairs
        ]
        corpus = corpus_rouge(pairs, lowercase=request.lowercase)
        return RougeReply(
            per_pair=per_pair,
            corpus={
                variant: RougeTriple(
                    precision=s.precision, recall=s.recall, f1=s.f1
                )
                for variant, s in corpus.items()
            },
            display={
                variant: {
                    "precision": display_value(s.precision),
                    "recall": display_value(s.recall),
                    "f1": display_value(s.f1),
                }
                for variant, s in corpus.items()
            },
        )

    @app.post("/coco", response_model=CocoReply)
    def coco(request: CocoRequest) -> CocoReply:
        policy = parse_policy(request.policy)
        scorer = build_scorer(
            request.scorer.kind,
            vocab,
            alpha=request.scorer.alpha,
            mask_token=request.scorer.mask_token,
            url=request.scorer.url,
            timeout=request.scorer.timeout,
            max_inflight=request.scorer.max_inflight,
        )
        result = coco_score(
            scorer,
            request.source,
            request.summary,
            policy,
            lexicon,
            gazetteer,
            mask_token=request.scorer.mask_token,
        )
        return CocoReply(
            keywords=[
                KeywordScoreModel(
                    word=k.word, token=k.token, score_x=k.score_x, score_m=k.score_m
                )
                for k in result.keywords
            ],
            n=result.n,
            score_x_mean=result.score_x_mean,
            score_m_mean=result.score_m_mean,
            coco=result.coco,
            model_id=result.model_id,
            dropped=list(result.dropped),
        )

    @app.post("/prompt", response_model=CorpusReply)
    def prompt(request: PromptRequest) -> CorpusReply:
        docs = _documents(request.documents)
        whitelist = frozenset(request.whitelist) if request.whitelist is not None else None
        out, report = run_prompt(
            docs,
            lexicon,
            gazetteer,
            relation_source=request.relation_source,
            whitelist=whitelist,
            length_limit=request.length_limit,
            count_prompt=request.count_prompt,
            unit=request.unit,
            vocab=vocab,
        )
        return CorpusReply(
            documents=[document_to_record(d) for d in out], report=report.to_dict()
        )

    @app.post("/senex", response_model=CorpusReply)
    def senex(request: SenexRequest) -> CorpusReply:
        docs = _documents(request.documents)
        out, report, decisions = run_senex(
            docs,
            request.mode,
            request.seed,
            vocab,
            length_limit=request.length_limit,
            unit=request.unit,
        )
        return CorpusReply(
            documents=[document_to_record(d) for d in out],
            report={
                "total": report.total,
                "kept": report.kept,
                "skipped": [{"id": i, "reason": r} for i, r in report.skipped],
                "dropped_by_length": [d.document.id for d in decisions if not d.kept],
            },
        )

    @app.post("/eval", response_model=EvalReply)
    def evaluate(request: EvalRequest) -> EvalReply:
        docs = _documents(request.documents)
        candidates = _candidates(request.candidates)
        scorer = build_scorer(
            request.scorer.kind,
            vocab,
            alpha=request.scorer.alpha,
            mask_token=request.scorer.mask_token,
            url=request.scorer.url,
            timeout=request.scorer.timeout,
            max_inflight=request.scorer.max_inflight,
        )
        # run semantics only: parallelism must not change the report
        config_hash = config_digest(
            {
                "operation": "eval",
                "scorer_kind": request.scorer.kind,
                "scorer_url": request.scorer.url,
                "alpha": request.scorer.alpha,
                "mask_token": request.scorer.mask_token,
                "policies": ["only_noun", "noun_verb"],
            }
        )
        report = run_eval(
            docs,
            candidates,
            scorer,
            lexicon,
            gazetteer,
            mask_token=request.scorer.mask_token,
            workers=request.workers,
            config_hash=config_hash,
            vocab_hash=vocab_hash,
        )
        return EvalReply(report=report.to_dict(), csv=report.to_csv())

    @app.post("/cases", response_model=CasesReply)
    def cases(request: CasesRequest) -> CasesReply:
        docs = _documents(request.documents)
        markdown, blocks = run_cases(
            docs,
            _candidates(request.baseline),
            _candidates(request.prompted),
            ids=request.ids,
        )
        return CasesReply(
            markdown=markdown,
            blocks=[
                CaseBlockModel(
                    id=b.id,
                    relation_prompt=b.relation_prompt,
                    gold=b.gold,
                    without_relation=b.without_relation,
                    with_relation=b.with_relation,
                    contains_keywords=b.contains_keywords,
                )
                for b in blocks
            ],
        )

    return app
