"""Turn raw bytes (plaintext, HTML, SRT, WebVTT) into a normalized SourceDocument."""

from __future__ import annotations

import enum
import html
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from typing import Optional


class IngestError(ValueError):
    pass


class DocKind(enum.Enum):
    PLAINTEXT = "plaintext"
    HTML = "html"
    SRT = "srt"
    VTT = "vtt"


@dataclass(frozen=True)
class Cue:
    """One subtitle cue: a time range in ms and the character range of its line."""

    start_ms: int
    end_ms: int
    start: int
    end: int

    def to_dict(self) -> dict:
        return {"start_ms": self.start_ms, "end_ms": self.end_ms, "span": [self.start, self.end]}

    @classmethod
    def from_dict(cls, data: dict) -> "Cue":
        start, end = data["span"]
        return cls(data["start_ms"], data["end_ms"], start, end)


@dataclass(frozen=True)
class SourceDocument:
    origin: str
    kind: DocKind
    text: str
    cues: Optional[tuple[Cue, ...]] = None
    warnings: tuple[str, ...] = ()

    def time_range(self, start: int, end: int) -> Optional[tuple[int, int]]:
        """Time span of the cues overlapping the character range [start, end)."""
        if not self.cues:
            return None
        hits = [cue for cue in self.cues if cue.start < end and start < cue.end]
        if not hits:
            return None
        return min(c.start_ms for c in hits), max(c.end_ms for c in hits)


def decode_utf8(raw: bytes) -> tuple[str, list[str]]:
    """Decode UTF-8, replacing each invalid sequence with U+FFFD and noting it."""
    pieces: list[str] = []
    warnings: list[str] = []
    pos = 0
    while True:
        try:
            pieces.append(raw[pos:].decode("utf-8"))
            break
        except UnicodeDecodeError as err:
            pieces.append(raw[pos:pos + err.start].decode("utf-8"))
            pieces.append("\ufffd")
            warnings.append(f"invalid UTF-8 at byte {pos + err.start}: {err.reason}")
            pos += err.end
    text = "".join(pieces)
    if text.startswith("\ufeff"):
        text = text[1:]
    return text, warnings


def _normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n").replace("\x00", "")


def extract_plaintext(raw: bytes, origin: str = "") -> SourceDocument:
    text, warnings = decode_utf8(raw)
    text = _normalize_newlines(text).strip()
    return SourceDocument(origin, DocKind.PLAINTEXT, text, None, tuple(warnings))


# --- HTML -----------------------------------------------------------------

_SKIP_TAGS = frozenset({"script", "style", "noscript", "head", "template", "title"})
_PARAGRAPH_TAGS = frozenset({
    "p", "div", "li", "tr", "h1", "h2", "h3", "h4", "h5", "h6", "ul", "ol", "dl", "dt", "dd",
    "table", "thead", "tbody", "section", "article", "aside", "header", "footer", "nav",
    "main", "blockquote", "pre", "figure", "figcaption", "form", "fieldset", "hr", "address",
})
_LINE_TAGS = frozenset({"br", "td", "th"})
_VOID_TAGS = frozenset({"br", "hr", "img", "input", "meta", "link", "area", "base", "col", "embed", "source", "wbr"})

_PARA = object()
_LINE = object()


class _TextCollector(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list = []
        self._skip_stack: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "body":
            # an unclosed <head> must not swallow the page
            self._skip_stack.clear()
        if tag in _SKIP_TAGS:
            self._skip_stack.append(tag)
            return
        if self._skip_stack:
            return
        self._boundary(tag)

    def handle_startendtag(self, tag, attrs):
        if not self._skip_stack and tag not in _SKIP_TAGS:
            self._boundary(tag)

    def handle_endtag(self, tag):
        if self._skip_stack:
            if tag in self._skip_stack:
                while self._skip_stack and self._skip_stack.pop() != tag:
                    pass
            return
        if tag not in _VOID_TAGS:
            self._boundary(tag)

    def handle_data(self, data):
        if not self._skip_stack:
            self.parts.append(data)

    def _boundary(self, tag: str) -> None:
        if tag in _PARAGRAPH_TAGS:
            self.parts.append(_PARA)
        elif tag in _LINE_TAGS:
            self.parts.append(_LINE)


_RESIDUAL_TAG = re.compile(r"<[A-Za-z][^<>]*>")
_TAG_OPEN = re.compile(r"<(?=[A-Za-z])")
_INLINE_WS = re.compile(r"[^\S\n]+")


def _assemble(parts: list) -> str:
    paragraphs: list[list[str]] = [[]]
    line: list[str] = []

    def flush_line() -> None:
        collapsed = _INLINE_WS.sub(" ", "".join(line).replace("\n", " ")).strip()
        line.clear()
        if collapsed:
            paragraphs[-1].append(collapsed)

    for part in parts:
        if part is _PARA:
            flush_line()
            if paragraphs[-1]:
                paragraphs.append([])
        elif part is _LINE:
            flush_line()
        else:
            line.append(part.replace("\x00", ""))
    flush_line()
    return "\n\n".join("\n".join(lines) for lines in paragraphs if lines)


def extract_html(raw: bytes, origin: str = "") -> SourceDocument:
    """Visible text of an HTML page, one paragraph per block element.

    Markup that survives as literal text (stray ``<tag>`` remnants from
    broken pages or decoded ``&lt;`` entities) is dropped or defused so the
    output never contains a ``<`` directly followed by a letter.
    """
    decoded, warnings = decode_utf8(raw)
    parser = _TextCollector()
    parser.feed(_normalize_newlines(decoded))
    parser.close()
    text = _assemble(parser.parts)
    text = _RESIDUAL_TAG.sub("", text)
    text = _TAG_OPEN.sub("< ", text)
    # re-collapse anything the residual-tag pass opened up
    text = "\n".join(_INLINE_WS.sub(" ", ln).strip() for ln in text.split("\n"))
    text = re.sub(r"\n{3,}", "\n\n", text).strip()
    return SourceDocument(origin, DocKind.HTML, text, None, tuple(warnings))


# --- Subtitles --------------------------------------------------------------

_TIMESTAMP = r"(?:(\d+):)?(\d{1,2}):(\d{2})[.,](\d{1,3})"
_TIMING_LINE = re.compile(rf"^\s*{_TIMESTAMP}\s*-->\s*{_TIMESTAMP}")
_CUE_TAG = re.compile(r"<[^>]*>|\{\\[^}]*\}")


def _to_ms(hours, minutes, seconds, fraction) -> int:
    millis = int(fraction.ljust(3, "0"))
    return ((int(hours or 0) * 60 + int(minutes)) * 60 + int(seconds)) * 1000 + millis


def parse_timing(line: str) -> Optional[tuple[int, int]]:
    match = _TIMING_LINE.match(line)
    if not match:
        return None
    g = match.groups()
    if max(int(g[1]), int(g[2]), int(g[5]), int(g[6])) >= 60:
        return None
    return _to_ms(*g[:4]), _to_ms(*g[4:])


def _clean_cue_text(lines: list[str], kind: DocKind) -> str:
    text = " ".join(lines)
    text = _CUE_TAG.sub("", text)
    if kind is DocKind.VTT or "&" in text:
        text = html.unescape(text)
    text = text.replace("\x00", "")
    return " ".join(text.split())


def extract_subtitles(raw: bytes, kind: DocKind, origin: str = "") -> SourceDocument:
    """Parse SRT or WebVTT cues into one text line per cue, sorted by start time."""
    if kind not in (DocKind.SRT, DocKind.VTT):
        raise IngestError(f"not a subtitle kind: {kind}")
    decoded, warnings = decode_utf8(raw)
    blocks = re.split(r"\n[^\S\n]*\n", _normalize_newlines(decoded).strip())
    cues: list[tuple[int, int, str]] = []
    for number, block in enumerate(blocks, 1):
        lines = [ln for ln in block.split("\n")]
        if not block.strip():
            continue
        head = lines[0].strip()
        if kind is DocKind.VTT and (head.startswith("WEBVTT") or head.split(" ")[0] in {"NOTE", "STYLE", "REGION"}):
            continue
        timing_at = next((i for i, ln in enumerate(lines[:3]) if "-->" in ln), None)
        if timing_at is None:
            warnings.append(f"block {number}: no timing line, skipped")
            continue
        timing = parse_timing(lines[timing_at])
        if timing is None or timing[1] < timing[0]:
            warnings.append(f"block {number}: malformed timing {lines[timing_at].strip()!r}, skipped")
            continue
        text = _clean_cue_text(lines[timing_at + 1:], kind)
        if not text:
            warnings.append(f"block {number}: empty cue text, skipped")
            continue
        cues.append((timing[0], timing[1], text))
    if not cues:
        raise IngestError(f"no parseable cues in {origin or 'subtitle input'}")

    cues.sort(key=lambda cue: (cue[0], cue[1]))
    out: list[Cue] = []
    pos = 0
    for start_ms, end_ms, text in cues:
        out.append(Cue(start_ms, end_ms, pos, pos + len(text)))
        pos += len(text) + 1
    full = "\n".join(text for _, _, text in cues)
    return SourceDocument(origin, kind, full, tuple(out), tuple(warnings))


_EXTENSIONS = {
    ".txt": DocKind.PLAINTEXT, ".text": DocKind.PLAINTEXT, ".md": DocKind.PLAINTEXT,
    ".html": DocKind.HTML, ".htm": DocKind.HTML, ".xhtml": DocKind.HTML,
    ".srt": DocKind.SRT, ".vtt": DocKind.VTT,
}
_CONTENT_TYPES = {
    "text/plain": DocKind.PLAINTEXT, "text/html": DocKind.HTML,
    "application/xhtml+xml": DocKind.HTML, "application/x-subrip": DocKind.SRT, "text/vtt": DocKind.VTT,
}


def infer_kind(name: str = "", content_type: str = "") -> Optional[DocKind]:
    if content_type:
        kind = _CONTENT_TYPES.get(content_type.split(";")[0].strip().lower())
        if kind is not None:
            return kind
    lowered = name.lower().split("?")[0]
    for ext, kind in _EXTENSIONS.items():
        if lowered.endswith(ext):
            return kind
    return None


def extract(raw: bytes, kind: DocKind, origin: str = "") -> SourceDocument:
    if kind is DocKind.PLAINTEXT:
        return extract_plaintext(raw, origin)
    if kind is DocKind.HTML:
        return extract_html(raw, origin)
    return extract_subtitles(raw, kind, origin)
