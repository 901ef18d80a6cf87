"""Rule-based sentence splitting with character offsets."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

DEFAULT_MAX_LENGTH = 1000

TERMINATORS = ".!?…"
CJK_TERMINATORS = "。！？"
CLOSERS = "\"'”’)]}»」』）"
OPENERS = "\"'“‘«「『"
_LEADING_PUNCT = "([{\"'“‘«"

_PARAGRAPH_BREAK = re.compile(r"\n(?:[^\S\n]*\n)+")


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    start: int
    end: int

    @property
    def range(self) -> tuple[int, int]:
        return self.start, self.end


def parse_abbreviations(lines: Iterable[str]) -> frozenset[str]:
    tokens = set()
    for line in lines:
        token = line.split("#", 1)[0].strip()
        if token:
            tokens.add(token.casefold())
    return frozenset(tokens)


@lru_cache(maxsize=1)
def default_abbreviations() -> frozenset[str]:
    text = resources.files("verity.data").joinpath("abbreviations.txt").read_text("utf-8")
    return parse_abbreviations(text.splitlines())


def load_abbreviations(path: Union[str, Path], extend_defaults: bool = True) -> frozenset[str]:
    """Read an abbreviation file (one token per line, ``#`` comments)."""
    tokens = parse_abbreviations(Path(path).read_text("utf-8").splitlines())
    return tokens | default_abbreviations() if extend_defaults else tokens


def _paragraphs(text: str):
    pos = 0
    for match in _PARAGRAPH_BREAK.finditer(text):
        yield pos, match.start()
        pos = match.end()
    yield pos, len(text)


def _starts_sentence(ch: str) -> bool:
    return ch.isupper() or ch.istitle() or ch in OPENERS


def _boundaries(text: str, start: int, end: int, abbreviations: frozenset[str]):
    """Yield end offsets of sentences inside text[start:end]."""
    seg_start = start
    i = start
    while i < end:
        ch = text[i]
        if ch in CJK_TERMINATORS:
            j = i + 1
            while j < end and (text[j] in CJK_TERMINATORS or text[j] in CLOSERS):
                j += 1
            yield j
            seg_start = i = j
            continue
        if ch not in TERMINATORS:
            i += 1
            continue
        j = i + 1
        while j < end and text[j] in TERMINATORS:
            j += 1
        run_end = j
        while j < end and text[j] in CLOSERS:
            j += 1
        k = j
        while k < end and text[k].isspace():
            k += 1
        if k == j or k == end or not _starts_sentence(text[k]):
            i = run_end
            continue
        if run_end - i == 1 and ch == ".":
            w = i
            while w > seg_start and not text[w - 1].isspace():
                w -= 1
            token = text[w:i + 1].lstrip(_LEADING_PUNCT).casefold()
            if token in abbreviations:
                i = run_end
                continue
        yield j
        seg_start = i = k


def _limit_length(text: str, start: int, end: int, max_length: int):
    while end - start > max_length:
        cut = None
        for pos in range(start + max_length, start, -1):
            if text[pos].isspace():
                cut = pos
                break
        if cut is None:
            cut = start + max_length
            yield start, cut
            start = cut
        else:
            yield start, cut
            start = cut + 1
        while start < end and text[start].isspace():
            start += 1
    if start < end:
        yield start, end


def _trim(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def split_sentences(
    text: str,
    abbreviations: Optional[Iterable[str]] = None,
    max_length: int = DEFAULT_MAX_LENGTH,
) -> list[Sentence]:
    """Split ``text`` into sentences carrying [start, end) offsets into it.

    A sentence ends after a run of ``. ! ? …`` (plus any closing quotes or
    brackets) when whitespace and an uppercase letter or opening quote
    follow, unless the word ending in "." is a known abbreviation. CJK
    terminators always end a sentence, as does a blank line. Sentences
    longer than ``max_length`` are cut at the last whitespace before the
    limit.
    """
    if max_length < 1:
        raise ValueError("max_length must be positive")
    if abbreviations is None:
        abbrevs = default_abbreviations()
    else:
        abbrevs = frozenset(a.casefold() for a in abbreviations)

    out: list[Sentence] = []
    for para_start, para_end in _paragraphs(text):
        para_start, para_end = _trim(text, para_start, para_end)
        if para_start == para_end:
            continue
        seg = para_start
        cuts = list(_boundaries(text, para_start, para_end, abbrevs)) + [para_end]
        for cut in cuts:
            s, e = _trim(text, seg, cut)
            seg = cut
            if s == e:
                continue
            for ps, pe in _limit_length(text, s, e, max_length):
                ps, pe = _trim(text, ps, pe)
                if ps < pe:
                    out.append(Sentence(len(out), text[ps:pe], ps, pe))
    return out
