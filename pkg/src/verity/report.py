"""Document assessment and JSON / annotated-HTML reports."""

from __future__ import annotations

import html
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional

from .agent import AgentTrace
from .claims import GlobalScore, Outcome, SentenceVerdict, Strategy, Verdict, global_score
from .ingest import Cue, DocKind, SourceDocument
from .pipeline import Judge
from .segment import DEFAULT_MAX_LENGTH, Sentence, split_sentences

SCHEMA_VERSION = 1


class ReportFormatError(ValueError):
    pass


@dataclass
class Report:
    origin: str
    kind: DocKind
    sentences: list[Sentence]
    verdicts: list[SentenceVerdict]
    global_score: GlobalScore
    strategy: Strategy
    model_id: str
    created_at: str
    warnings: list[str] = field(default_factory=list)
    agent_traces: dict[int, AgentTrace] = field(default_factory=dict)
    cues: Optional[list[Cue]] = None
    paragraph_starts: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.sentences) != len(self.verdicts):
            raise ReportFormatError("sentences and verdicts must be index-aligned")

    def time_range(self, sentence: Sentence) -> Optional[tuple[int, int]]:
        if not self.cues:
            return None
        hits = [c for c in self.cues if c.start < sentence.end and sentence.start < c.end]
        if not hits:
            return None
        return min(c.start_ms for c in hits), max(c.end_ms for c in hits)


def _timestamp(created_at: Optional[datetime]) -> str:
    if created_at is None:
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        if epoch:
            created_at = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
        else:
            created_at = datetime.now(timezone.utc)
    if created_at.tzinfo is None:
        created_at = created_at.replace(tzinfo=timezone.utc)
    return created_at.astimezone(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def _paragraph_starts(text: str, sentences: list[Sentence]) -> list[int]:
    starts = []
    for prev, cur in zip(sentences, sentences[1:]):
        gap = text[prev.end:cur.start]
        if gap.count("\n") >= 2:
            starts.append(cur.index)
    return starts


def assess_document(
    doc: SourceDocument,
    judge: Judge,
    *,
    max_workers: int = 4,
    created_at: Optional[datetime] = None,
    abbreviations: Optional[Iterable[str]] = None,
    max_length: int = DEFAULT_MAX_LENGTH,
) -> Report:
    """Segment ``doc``, judge every sentence once and aggregate.

    A sentence whose answer cannot be parsed, or whose request exhausted
    its retries, is recorded as unable-to-judge with a warning. Results are
    ordered by sentence index whatever order the workers finish in.
    """
    sentences = split_sentences(doc.text, abbreviations, max_length)
    if max_workers <= 1 or len(sentences) <= 1:
        judgments = [judge.check_lenient(s.text) for s in sentences]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            judgments = list(pool.map(lambda s: judge.check_lenient(s.text), sentences))

    verdicts = [SentenceVerdict(s.index, j.verdict) for s, j in zip(sentences, judgments)]
    warnings = list(doc.warnings)
    for s, j in zip(sentences, judgments):
        warnings.extend(f"sentence {s.index}: {w}" for w in j.warnings)
    traces = {s.index: j.trace for s, j in zip(sentences, judgments) if j.trace is not None}
    return Report(
        origin=doc.origin,
        kind=doc.kind,
        sentences=sentences,
        verdicts=verdicts,
        global_score=global_score(verdicts),
        strategy=judge.strategy,
        model_id=judge.model_id,
        created_at=_timestamp(created_at),
        warnings=warnings,
        agent_traces=traces,
        cues=list(doc.cues) if doc.cues else None,
        paragraph_starts=_paragraph_starts(doc.text, sentences),
    )


# --- JSON -------------------------------------------------------------------


def report_to_dict(report: Report) -> dict:
    sentences = []
    for sentence, item in zip(report.sentences, report.verdicts):
        time_range = report.time_range(sentence)
        trace = report.agent_traces.get(sentence.index)
        sentences.append({
            "index": sentence.index,
            "text": sentence.text,
            "span": [sentence.start, sentence.end],
            "time_range": list(time_range) if time_range else None,
            "verdict": item.verdict.to_dict(),
            "agent_trace": trace.to_dict() if trace is not None else None,
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "document": {
            "origin": report.origin,
            "kind": report.kind.value,
            "cues": [c.to_dict() for c in report.cues] if report.cues is not None else None,
            "paragraph_starts": list(report.paragraph_starts),
        },
        "strategy": report.strategy.value,
        "model_id": report.model_id,
        "created_at": report.created_at,
        "global": report.global_score.to_dict(),
        "sentences": sentences,
        "warnings": list(report.warnings),
    }


def render_json(report: Report) -> bytes:
    return (json.dumps(report_to_dict(report), ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def report_from_dict(data: dict) -> Report:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ReportFormatError(f"unsupported schema_version {data.get('schema_version')!r}")
    try:
        doc = data["document"]
        sentences, verdicts, traces = [], [], {}
        for item in data["sentences"]:
            start, end = item["span"]
            sentences.append(Sentence(item["index"], item["text"], start, end))
            verdicts.append(SentenceVerdict(item["index"], Verdict.from_dict(item["verdict"])))
            if item.get("agent_trace") is not None:
                traces[item["index"]] = AgentTrace.from_dict(item["agent_trace"])
        cues = doc.get("cues")
        return Report(
            origin=doc["origin"],
            kind=DocKind(doc["kind"]),
            sentences=sentences,
            verdicts=verdicts,
            global_score=GlobalScore.from_dict(data["global"]),
            strategy=Strategy(data["strategy"]),
            model_id=data["model_id"],
            created_at=data["created_at"],
            warnings=list(data.get("warnings", ())),
            agent_traces=traces,
            cues=[Cue.from_dict(c) for c in cues] if cues is not None else None,
            paragraph_starts=list(doc.get("paragraph_starts", ())),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ReportFormatError(f"malformed report: {err!r}") from None


def parse_report(raw: bytes) -> Report:
    return report_from_dict(json.loads(raw))


# --- HTML -------------------------------------------------------------------

_STYLE = """
body { font-family: Georgia, serif; margin: 0; padding: 4.5rem 2rem 2rem; color: #222; line-height: 1.6; }
.badge { position: absolute; top: 0.75rem; left: 0.75rem; background: #222; color: #fff;
  padding: 0.35rem 0.7rem; border-radius: 0.4rem; font-family: sans-serif; }
.badge .score { font-size: 1.4rem; font-weight: bold; }
.badge svg { display: block; margin-top: 0.2rem; }
.false-part { background: none; color: inherit; text-decoration: underline dashed red;
  text-decoration-thickness: 2px; text-underline-offset: 3px; }
.zero-score { background: #cfe3ff; box-shadow: 0 0 0 2px #5b9bff; }
.excluded { color: #999; }
.chart { margin-top: 2rem; font-family: sans-serif; font-size: 0.8rem; }
.chart .row { display: flex; align-items: center; margin: 0.15rem 0; }
.chart .row-label { width: 3rem; }
.chart .track { flex: 1; background: #eee; height: 0.8rem; max-width: 30rem; }
.chart .bar { background: #4a7; height: 100%; }
.chart .bar.low { background: #d55; }
.chart .bar.neutral { width: 100%; background: repeating-linear-gradient(45deg, #ddd, #ddd 4px, #f7f7f7 4px, #f7f7f7 8px); }
.chart .value { width: 3.5rem; text-align: right; }
"""


def _sparkline(series) -> str:
    points = [(i, v) for i, v in enumerate(series) if v is not None]
    if not points:
        return ""
    width, height = 120, 24
    span = max(len(series) - 1, 1)
    coords = " ".join(f"{i * width / span:.1f},{height - v * height / 100:.1f}" for i, v in points)
    return (
        f'<svg class="sparkline" width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
        f'<polyline fill="none" stroke="#8cf" stroke-width="1.5" points="{coords}"/></svg>'
    )


def _sentence_html(sentence: Sentence, verdict: Verdict) -> str:
    spans = sorted(p.span for p in verdict.false_parts if p.span is not None)
    pieces, pos = [], 0
    for start, end in spans:
        if start < pos or end > len(sentence.text):
            continue
        pieces.append(html.escape(sentence.text[pos:start]))
        pieces.append(f'<mark class="false-part">{html.escape(sentence.text[start:end])}</mark>')
        pos = end
    pieces.append(html.escape(sentence.text[pos:]))

    classes = ["sentence"]
    if verdict.outcome is Outcome.JUDGED:
        if verdict.score == 0:
            classes.append("zero-score")
        title = f"{verdict.score}% ({verdict.label.value})"
        if verdict.reason:
            title += f" - {verdict.reason}"
        score_attr = f' data-score="{verdict.score}"'
    else:
        classes.append("excluded")
        title = "not verifiable" if verdict.outcome is Outcome.NON_VERIFIABLE else "unable to judge"
        score_attr = ""
    return (
        f'<span class="{" ".join(classes)}" data-index="{sentence.index}"{score_attr} '
        f'title="{html.escape(title)}">{"".join(pieces)}</span>'
    )


def _bar_html(sentence: Sentence, verdict: Verdict) -> str:
    if verdict.outcome is Outcome.JUDGED:
        low = " low" if verdict.score < 50 else ""
        bar = f'<div class="bar{low}" style="width: {verdict.score}%"></div>'
        value = f"{verdict.score}%"
    else:
        bar = '<div class="bar neutral"></div>'
        value = "n/a"
    return (
        f'<div class="row" data-index="{sentence.index}"><span class="row-label">#{sentence.index + 1}</span>'
        f'<div class="track">{bar}</div><span class="value">{value}</span></div>'
    )


def render_html(report: Report) -> str:
    """Self-contained annotated page: score badge, marked sentences, per-sentence bars."""
    mean = report.global_score.mean_percent
    badge_value = f"{mean}%" if mean is not None else "n/a"
    paragraphs, current = [], []
    breaks = set(report.paragraph_starts)
    for sentence, item in zip(report.sentences, report.verdicts):
        if sentence.index in breaks and current:
            paragraphs.append(current)
            current = []
        current.append(_sentence_html(sentence, item.verdict))
    if current:
        paragraphs.append(current)
    body = "\n".join(f"<p>{' '.join(p)}</p>" for p in paragraphs)
    bars = "\n".join(_bar_html(s, v.verdict) for s, v in zip(report.sentences, report.verdicts))
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        f"<title>Veracity report: {html.escape(report.origin or 'document')}</title>\n"
        f"<style>{_STYLE}</style>\n</head>\n<body>\n"
        f'<div class="badge" data-global="{mean if mean is not None else ""}">Global Veracity '
        f'<span class="score">{badge_value}</span>{_sparkline(report.global_score.prefix_series)}</div>\n'
        f'<main class="document">\n{body}\n</main>\n'
        f'<section class="chart">\n{bars}\n</section>\n'
        "</body>\n</html>\n"
    )
