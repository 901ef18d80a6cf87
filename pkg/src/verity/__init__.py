"""Sentence-level veracity assessment with LLM prompting or a search agent."""

__version__ = "0.1.0"

from .claims import (
    DomainError,
    FalsePart,
    GlobalScore,
    Outcome,
    SentenceVerdict,
    Strategy,
    VeracityLabel,
    Verdict,
    global_score,
    label_from_score,
    prefix_scores,
)
from .ingest import DocKind, SourceDocument, extract, extract_html, extract_plaintext, extract_subtitles
from .parsing import RawAnswer, VerdictParseError, locate_false_part, parse_verdict
from .pipeline import Judge
from .prompting import PromptBundle, build_fewshot_prompt
from .report import Report, assess_document, parse_report, render_html, render_json
from .segment import Sentence, split_sentences

__all__ = [
    "DocKind", "DomainError", "FalsePart", "GlobalScore", "Judge", "Outcome", "PromptBundle",
    "RawAnswer", "Report", "Sentence", "SentenceVerdict", "SourceDocument", "Strategy",
    "VeracityLabel", "Verdict", "VerdictParseError", "assess_document", "build_fewshot_prompt",
    "extract", "extract_html", "extract_plaintext", "extract_subtitles", "global_score",
    "label_from_score", "locate_false_part", "parse_report", "parse_verdict", "prefix_scores",
    "render_html", "render_json", "split_sentences",
]
