"""Command line entry point: check, scan, eval, render, serve."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .. import __version__
from ..claims import DomainError, Outcome, Strategy, Verdict
from ..evalharness import DatasetError, TABLE_HEADER, format_row, load_dataset, run_eval, write_outputs
from ..ingest import DocKind, IngestError, extract, infer_kind
from ..parsing import VerdictParseError
from ..pipeline import Judge
from ..provider import (
    FixtureSearch,
    HttpChatBackend,
    HttpSearchBackend,
    HttpTransport,
    MockBackend,
    ProviderError,
    RecordReplayBackend,
    load_fixtures,
)
from ..report import ReportFormatError, assess_document, parse_report, render_html, render_json
from .bot import FactCheckBot, TelegramClient, install_signal_handlers
from .config import AppConfig, load_config
from .fetch import FetchError, fetch_url

log = logging.getLogger("verity")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NON_VERIFIABLE = 3
EXIT_UNABLE = 4

EXIT_FOR_OUTCOME = {
    Outcome.JUDGED: EXIT_OK,
    Outcome.NON_VERIFIABLE: EXIT_NON_VERIFIABLE,
    Outcome.UNABLE_TO_JUDGE: EXIT_UNABLE,
}


class UsageError(Exception):
    pass


class _Combined:
    """One object serving both halves, so a single cache wraps them."""

    def __init__(self, model, search):
        self.model, self.search_backend = model, search

    def complete(self, request):
        return self.model.complete(request)

    def search(self, query, k=5):
        if self.search_backend is None:
            raise DomainError("no search backend configured")
        return self.search_backend.search(query, k)


def build_backends(args, config: AppConfig):
    """(model, search) for the ``--backend`` choice."""
    backend = args.backend
    if backend in ("mock", "record") and args.fixtures:
        model, search = load_fixtures(args.fixtures)
    elif backend == "mock":
        raise UsageError("--backend mock needs --fixtures FILE")
    elif backend in ("live", "record"):
        transport = HttpTransport(config.provider)
        model = HttpChatBackend(config.provider, transport)
        search = HttpSearchBackend(config.provider, transport) if config.provider.search_endpoint else None
    else:
        model = search = None

    if backend in ("record", "replay"):
        if not args.cache:
            raise UsageError(f"--backend {backend} needs --cache FILE")
        if backend == "replay" and not Path(args.cache).exists():
            raise UsageError(f"replay cache {args.cache} does not exist")
        inner = _Combined(model, search) if backend == "record" else None
        wrapped = RecordReplayBackend(inner, args.cache, backend)
        return wrapped, wrapped
    return model, search


def build_judge(args, config: AppConfig) -> Judge:
    model, search = build_backends(args, config)
    strategy = Strategy(args.strategy) if args.strategy else config.strategy
    if strategy is Strategy.AGENT and search is None:
        raise UsageError("the agent strategy needs a search backend (search_endpoint, fixtures or cache)")
    model_id = args.model or config.model_id
    if args.backend == "mock" and not args.model:
        model_id = "mock"
    return Judge(model, search, strategy, model_id, max_steps=args.max_steps or config.max_steps)


# --- subcommands ----------------------------------------------------------------


def _verdict_lines(verdict: Verdict) -> list[str]:
    if verdict.outcome is Outcome.NON_VERIFIABLE:
        return ["Not verifiable: the statement is not objective or checkable."]
    if verdict.outcome is Outcome.UNABLE_TO_JUDGE:
        return ["Unable to judge.", f"Reason: {verdict.reason or '—'}"]
    parts = ", ".join(p.text for p in verdict.false_parts)
    return [
        f"Veracity score: {verdict.score}% ({verdict.label.value})",
        f"False part: {parts or '—'}",
        f"Reason: {verdict.reason or '—'}",
    ]


def cmd_check(args, config: AppConfig) -> int:
    statement = args.statement
    if statement is None or statement == "-":
        statement = sys.stdin.read()
    if not statement or not statement.strip():
        raise UsageError("statement must be non-empty")
    judge = build_judge(args, config)
    judgment = judge.check(statement.strip())
    verdict = judgment.verdict
    if args.json:
        out = {
            "statement": statement.strip(),
            "strategy": judge.strategy.value,
            "model_id": judge.model_id,
            "verdict": verdict.to_dict(),
            "agent_trace": judgment.trace.to_dict() if judgment.trace else None,
        }
        print(json.dumps(out, ensure_ascii=False, indent=2))
    else:
        print("\n".join(_verdict_lines(verdict)))
    return EXIT_FOR_OUTCOME[verdict.outcome]


_BINARY_TYPES = ("application/pdf", "image/", "audio/", "video/", "application/zip", "application/octet-stream")


def _sniff(raw: bytes) -> DocKind:
    head = raw[:2048].lstrip().decode("utf-8", "replace")
    if head.startswith("WEBVTT"):
        return DocKind.VTT
    lowered = head.lower()
    if lowered.startswith(("<!doctype html", "<html")) or "<body" in lowered or "<p>" in lowered:
        return DocKind.HTML
    if "-->" in head and any(line.strip().isdigit() for line in head.splitlines()[:3]):
        return DocKind.SRT
    return DocKind.PLAINTEXT


def _read_input(source: str, forced: Optional[str]) -> tuple[bytes, DocKind]:
    content_type = ""
    if source.startswith(("http://", "https://")):
        raw, content_type = fetch_url(source)
    else:
        raw = Path(source).read_bytes()
    if forced:
        return raw, DocKind(forced)
    kind = infer_kind(source, content_type)
    if kind is not None:
        return raw, kind
    if content_type.lower().startswith(_BINARY_TYPES) or b"\x00" in raw[:4096]:
        raise UsageError(f"unsupported input kind for {source} ({content_type or 'binary data'})")
    return raw, _sniff(raw)


def cmd_scan(args, config: AppConfig) -> int:
    raw, kind = _read_input(args.input, args.kind)
    doc = extract(raw, kind, origin=args.input)
    judge = build_judge(args, config)
    report = assess_document(doc, judge, max_workers=args.concurrency)
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_bytes(render_json(report))
    (out / "report.html").write_text(render_html(report), "utf-8")
    mean = report.global_score.mean_percent
    print(f"Global Veracity: {mean}%" if mean is not None else "Global Veracity: n/a")
    print(f"sentences: {len(report.sentences)}, judged: {report.global_score.judged_count}, "
          f"excluded: {report.global_score.excluded_count}", file=sys.stderr)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args, config: AppConfig) -> int:
    dataset = load_dataset(args.dataset, args.format)
    judge = build_judge(args, config)
    summary, records = run_eval(dataset, judge, args.mode, max_workers=args.concurrency)
    method = args.method or f"{judge.model_id} ({judge.strategy.value})"
    if args.json:
        print(json.dumps({"method": method, "mode": args.mode, **summary.to_dict()}, indent=2))
    else:
        print(TABLE_HEADER)
        print(format_row(method, summary))
    if args.out:
        write_outputs(args.out, summary, records, method=method, mode=args.mode)
    return EXIT_OK


def cmd_render(args, config: AppConfig) -> int:
    report = parse_report(Path(args.report).read_bytes())
    page = render_html(report)
    if args.out:
        Path(args.out).write_text(page, "utf-8")
    else:
        sys.stdout.write(page)
    return EXIT_OK


def cmd_serve(args, config: AppConfig) -> int:
    token = os.environ.get(config.bot_token_env)
    if not token:
        print(f"error: environment variable {config.bot_token_env} is not set", file=sys.stderr)
        return EXIT_ERROR
    judge = build_judge(args, config)
    client = TelegramClient(config.bot_api_base, token, timeout=config.poll_timeout + 15)
    bot = FactCheckBot(
        client,
        lambda text: judge.check(text).verdict,
        max_workers=config.provider.max_in_flight,
        poll_timeout=config.poll_timeout,
        poll_interval=config.poll_interval,
    )
    install_signal_handlers(bot)
    log.info("bot polling %s", config.bot_api_base)
    bot.run()
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON settings file")
    common.add_argument("--strategy", choices=[s.value for s in Strategy])
    common.add_argument("--backend", choices=["live", "mock", "record", "replay"], default="live")
    common.add_argument("--fixtures", help="JSON fixture file for the mock backend")
    common.add_argument("--cache", help="JSON-lines cache for record/replay")
    common.add_argument("--model", help="model id sent to the provider")
    common.add_argument("--max-steps", type=int, default=None, help="agent plan length cap")
    common.add_argument("--concurrency", type=int, default=4, help="parallel judgments")
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="verity", description="Veracity assessment of statements and documents.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="judge one statement")
    p.add_argument("statement", nargs="?", help="statement text; omit or '-' to read stdin")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("scan", parents=[common], help="assess a page, transcript or subtitle file")
    p.add_argument("input", help="file path or http(s) URL")
    p.add_argument("--kind", choices=[k.value for k in DocKind])
    p.add_argument("--out", help="output directory for report.json and report.html")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("eval", parents=[common], help="accuracy over a labeled dataset")
    p.add_argument("dataset")
    p.add_argument("--format", choices=["csv", "jsonl"])
    p.add_argument("--mode", choices=["polarity", "coarse"], default="polarity")
    p.add_argument("--method", help="row label in the printed table")
    p.add_argument("--out", help="directory for summary.json and items.jsonl")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", parents=[common], help="turn report.json into annotated HTML")
    p.add_argument("report")
    p.add_argument("--out", help="output HTML file (default stdout)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("serve", parents=[common], help="run the Telegram bot")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    # httpx logs full request URLs, and the bot URL embeds its token
    logging.getLogger("httpx").setLevel(logging.WARNING)
    logging.getLogger("httpcore").setLevel(logging.WARNING)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"verity: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ProviderError, VerdictParseError, FetchError, IngestError, DatasetError,
            ReportFormatError, DomainError, OSError, ValueError) as err:
        print(f"verity: error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
