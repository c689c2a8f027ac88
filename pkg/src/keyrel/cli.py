"""Command line interface.

Every command is a thin client of the HTTP service: it reads local files,
posts one request, and writes the response. By default the service runs
in-process; pass --server (or set KEYREL_SERVER) to target a running
instance instead. Exit codes: 0 success, 1 usage, 2 data error, 3 scorer
or transport error.
"""
from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

from .corpus import Document, document_to_record, ingest_candidates, ingest_jsonl
from .errors import DataError, ScorerError, TransportError
from .service import ServiceSettings, create_app

_CONFIG_KEYS = {
    "server", "vocab", "merges", "lexicon", "gazetteer", "relation_source",
    "whitelist", "length_limit", "count_prompt", "unit", "mode", "seed",
    "scorer", "scorer_url", "alpha", "mask_token", "timeout", "max_inflight",
    "workers", "policy", "host", "port",
}


def _read_config(ctx: click.Context, param: click.Parameter, value: str | None):
    """Load key=value defaults; explicit flags and env vars still win."""
    if not value:
        return value
    settings: dict[str, str] = {}
    path = Path(value)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise click.UsageError(f"cannot read config file: {exc}")
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise click.UsageError(f"{path}:{lineno}: expected key=value")
        key, _, raw = stripped.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise click.UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        settings[key] = raw.strip()
    ctx.default_map = {**(ctx.default_map or {}), **settings}
    return value


def _common(func):
    func = click.option(
        "--config", default=None, callback=_read_config, is_eager=True,
        expose_value=False, help="Config file with key=value defaults.",
    )(func)
    func = click.option(
        "--server", envvar="KEYREL_SERVER", default=None,
        help="Base URL of a running service; default runs in-process.",
    )(func)
    for name in ("gazetteer", "lexicon", "merges", "vocab"):
        func = click.option(
            f"--{name}", default=None, type=click.Path(exists=True, dir_okay=False),
            help=f"Path to the {name} file (in-process mode only).",
        )(func)
    return func


def _post(
    path: str,
    payload: dict,
    server: str | None,
    vocab: str | None = None,
    merges: str | None = None,
    lexicon: str | None = None,
    gazetteer: str | None = None,
) -> dict:
    """Send one request, in-process unless a server URL is configured."""

    async def go() -> httpx.Response:
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=300.0) as client:
                return await client.post(path, json=payload)
        app = create_app(
            ServiceSettings(
                vocab_path=vocab,
                merges_path=merges,
                lexicon_path=lexicon,
                gazetteer_path=gazetteer,
            )
        )
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://keyrel.internal", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    try:
        response = asyncio.run(go())
    except httpx.TimeoutException as exc:
        raise TransportError(f"service timed out: {exc}") from exc
    except httpx.HTTPError as exc:
        raise TransportError(f"service unreachable: {exc}") from exc
    if response.status_code == 200:
        return response.json()
    try:
        detail = response.json().get("detail", response.text)
    except ValueError:
        detail = response.text
    if response.status_code == 502:
        raise ScorerError(str(detail))
    raise DataError(str(detail))


def _load_documents(path: str) -> list[dict]:
    return [document_to_record(d) for d in ingest_jsonl(path)]


def _load_candidates(path: str) -> list[dict]:
    return [{"id": k, "summary": v} for k, v in ingest_candidates(path).items()]


def _write_documents(records: list[dict], path: str) -> None:
    docs = []
    for record in records:
        extra = {
            k: v
            for k, v in record.items()
            if k not in {"id", "source", "target", "prompt", "relation"}
        }
        docs.append(
            Document(
                id=record["id"],
                source=record["source"],
                target=record.get("target", ""),
                prompt=record.get("prompt"),
                relation=record.get("relation"),
                extra=extra,
            )
        )
    from .corpus import emit_jsonl

    emit_jsonl(docs, path)


def _write_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _scorer_spec(scorer, scorer_url, alpha, mask_token, timeout, max_inflight) -> dict:
    return {
        "kind": scorer,
        "url": scorer_url,
        "alpha": alpha,
        "mask_token": mask_token,
        "timeout": timeout,
        "max_inflight": max_inflight,
    }


def _scorer_options(func):
    func = click.option("--max-inflight", default=8, show_default=True, type=int)(func)
    func = click.option("--timeout", default=30.0, show_default=True, type=float)(func)
    func = click.option("--mask-token", default="<mask>", show_default=True)(func)
    func = click.option("--alpha", default=1.0, show_default=True, type=float)(func)
    func = click.option(
        "--scorer-url", envvar="KEYREL_SCORER_URL", default=None,
        help="Remote scorer endpoint; the environment variable wins over config files.",
    )(func)
    func = click.option(
        "--scorer", default="builtin", show_default=True,
        type=click.Choice(["builtin", "uniform", "remote"]),
    )(func)
    return func


@click.group()
def cli() -> None:
    """Key-relation prompting and summary evaluation."""


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--report", "report_path", default=None, type=click.Path(dir_okay=False))
@click.option(
    "--relation-source", default="target_text", show_default=True,
    type=click.Choice(["target_text", "source_text"]),
)
@click.option("--whitelist", default=None, help="Comma-separated entity tags to require.")
@click.option("--length-limit", default=800, show_default=True, type=int)
@click.option("--no-length-filter", is_flag=True, default=False)
@click.option("--count-prompt/--no-count-prompt", default=True, show_default=True)
@click.option("--unit", default="words", show_default=True, type=click.Choice(["words", "tokens"]))
@_common
def prompt(
    input_path, output_path, report_path, relation_source, whitelist,
    length_limit, no_length_filter, count_prompt, unit,
    server, vocab, merges, lexicon, gazetteer,
) -> None:
    """Attach key-relation prompts to a corpus."""
    payload = {
        "documents": _load_documents(input_path),
        "relation_source": relation_source,
        "whitelist": [t.strip() for t in whitelist.split(",") if t.strip()] if whitelist else None,
        "length_limit": None if no_length_filter else length_limit,
        "count_prompt": count_prompt,
        "unit": unit,
    }
    reply = _post("/prompt", payload, server, vocab, merges, lexicon, gazetteer)
    _write_documents(reply["documents"], output_path)
    if report_path:
        _write_json(reply["report"], report_path)
    report = reply["report"]
    click.echo(
        f"prompted {len(report['prompted'])}/{report['total']} documents, "
        f"dropped {len(report['dropped_by_length'])} by length",
        err=True,
    )


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--report", "report_path", default=None, type=click.Path(dir_okay=False))
@click.option("--mode", required=True, type=click.Choice(["senex1", "senex2", "senex3"]))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--length-limit", default=None, type=int)
@click.option("--unit", default="words", show_default=True, type=click.Choice(["words", "tokens"]))
@_common
def senex(
    input_path, output_path, report_path, mode, seed, length_limit, unit,
    server, vocab, merges, lexicon, gazetteer,
) -> None:
    """Build a sentence-probe dataset from a corpus."""
    payload = {
        "documents": _load_documents(input_path),
        "mode": mode,
        "seed": seed,
        "length_limit": length_limit,
        "unit": unit,
    }
    reply = _post("/senex", payload, server, vocab, merges, lexicon, gazetteer)
    _write_documents(reply["documents"], output_path)
    if report_path:
        _write_json(reply["report"], report_path)
    report = reply["report"]
    click.echo(
        f"kept {report['kept']}/{report['total']} documents "
        f"({len(report['skipped'])} skipped)",
        err=True,
    )


@cli.command("eval")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", "candidates_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-json", default=None, type=click.Path(dir_okay=False))
@click.option("--out-csv", default=None, type=click.Path(dir_okay=False))
@click.option("--workers", default=1, show_default=True, type=click.IntRange(1, 64))
@_scorer_options
@_common
def evaluate(
    input_path, candidates_path, out_json, out_csv, workers,
    scorer, scorer_url, alpha, mask_token, timeout, max_inflight,
    server, vocab, merges, lexicon, gazetteer,
) -> None:
    """Score candidate summaries with ROUGE and consistency metrics."""
    if not out_json and not out_csv:
        raise click.UsageError("pass --out-json and/or --out-csv")
    payload = {
        "documents": _load_documents(input_path),
        "candidates": _load_candidates(candidates_path),
        "scorer": _scorer_spec(scorer, scorer_url, alpha, mask_token, timeout, max_inflight),
        "workers": workers,
    }
    reply = _post("/eval", payload, server, vocab, merges, lexicon, gazetteer)
    if out_json:
        _write_json(reply["report"], out_json)
    if out_csv:
        Path(out_csv).write_text(reply["csv"], encoding="utf-8")
    aggregates = reply["report"]["aggregates"]
    rouge1 = aggregates["rouge_display"]["rouge1"]["f1"]
    click.echo(f"evaluated; corpus ROUGE-1 F1 {rouge1}", err=True)


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--baseline", "baseline_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", "candidates_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--ids", default=None, help="Comma-separated document ids to include.")
@click.option("--output", "output_path", default=None, type=click.Path(dir_okay=False))
@_common
def cases(
    input_path, baseline_path, candidates_path, ids, output_path,
    server, vocab, merges, lexicon, gazetteer,
) -> None:
    """Render side-by-side case tables for two candidate sets."""
    payload = {
        "documents": _load_documents(input_path),
        "baseline": _load_candidates(baseline_path),
        "prompted": _load_candidates(candidates_path),
        "ids": [i.strip() for i in ids.split(",") if i.strip()] if ids else None,
    }
    reply = _post("/cases", payload, server, vocab, merges, lexicon, gazetteer)
    if output_path:
        Path(output_path).write_text(reply["markdown"] + "\n", encoding="utf-8")
    else:
        click.echo(reply["markdown"])


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", "candidates_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", default=None, type=click.Path(dir_okay=False))
@click.option("--no-lowercase", is_flag=True, default=False)
@_common
def rouge(
    input_path, candidates_path, output_path, no_lowercase,
    server, vocab, merges, lexicon, gazetteer,
) -> None:
    """Compute ROUGE for candidates against corpus targets."""
    documents = ingest_jsonl(input_path)
    candidates = ingest_candidates(candidates_path)
    unknown = sorted(set(candidates) - {d.id for d in documents})
    if unknown:
        raise DataError(f"candidates reference unknown document ids: {unknown[:5]}")
    paired = [d for d in documents if d.id in candidates]
    if not paired:
        raise DataError("no candidate matches any document id")
    payload = {
        "pairs": [
            {"candidate": candidates[d.id], "reference": d.require_target()}
            for d in paired
        ],
        "lowercase": not no_lowercase,
    }
    reply = _post("/rouge", payload, server, vocab, merges, lexicon, gazetteer)
    out = {
        "rows": [
            {"id": doc.id, **scores}
            for doc, scores in zip(paired, reply["per_pair"])
        ],
        "corpus": reply["corpus"],
        "display": reply["display"],
        "missing": [d.id for d in documents if d.id not in candidates],
    }
    _write_json(out, output_path)


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", "candidates_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", default="only_noun", show_default=True)
@click.option("--output", "output_path", default=None, type=click.Path(dir_okay=False))
@_scorer_options
@_common
def coco(
    input_path, candidates_path, policy, output_path,
    scorer, scorer_url, alpha, mask_token, timeout, max_inflight,
    server, vocab, merges, lexicon, gazetteer,
) -> None:
    """Consistency-score candidates against their sources."""
    documents = ingest_jsonl(input_path)
    candidates = ingest_candidates(candidates_path)
    unknown = sorted(set(candidates) - {d.id for d in documents})
    if unknown:
        raise DataError(f"candidates reference unknown document ids: {unknown[:5]}")
    spec = _scorer_spec(scorer, scorer_url, alpha, mask_token, timeout, max_inflight)
    rows = []
    values = []
    skipped = []
    for doc in documents:
        if doc.id not in candidates:
            continue
        payload = {
            "source": doc.source,
            "summary": candidates[doc.id],
            "policy": policy,
            "scorer": spec,
        }
        try:
            reply = _post("/coco", payload, server, vocab, merges, lexicon, gazetteer)
        except DataError as exc:
            if "no keyword" in str(exc).lower() or "selected no" in str(exc).lower():
                skipped.append({"id": doc.id, "reason": str(exc)})
                continue
            raise
        rows.append({"id": doc.id, **reply})
        values.append(reply["coco"])
    if not rows and not skipped:
        raise DataError("no candidate matches any document id")
    out = {
        "rows": rows,
        "mean": sum(values) / len(values) if values else None,
        "skipped": skipped,
    }
    _write_json(out, output_path)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True, type=int)
@_common
def serve(host, port, server, vocab, merges, lexicon, gazetteer) -> None:
    """Run the HTTP service."""
    import uvicorn

    if server:
        raise click.UsageError("serve runs locally; --server does not apply")
    app = create_app(
        ServiceSettings(
            vocab_path=vocab, merges_path=merges,
            lexicon_path=lexicon, gazetteer_path=gazetteer,
        )
    )
    uvicorn.run(app, host=host, port=port)


def main(argv: list[str] | None = None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except TransportError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except ScorerError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
