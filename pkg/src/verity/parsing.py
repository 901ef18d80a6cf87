"""Parse model answers into Verdicts and find flagged phrases in the sentence."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .claims import FalsePart, Strategy, VeracityLabel, Verdict, label_from_score, round_half_up

FUZZY_THRESHOLD = 0.8


class VerdictParseError(ValueError):
    """No verdict grammar was found in a model answer; ``raw`` keeps the answer."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class RawAnswer:
    text: str
    strategy: Strategy = Strategy.FEW_SHOT


_FENCE = re.compile(r"^\s*```[\w-]*\s*$", re.MULTILINE)
_OUTPUT_PREFIX = re.compile(r"^\s*output\s*[:：]\s*", re.IGNORECASE)
_NULL = re.compile(r"^[\s\"'`*]*null[\s\"'`*.!]*$", re.IGNORECASE)
_UNABLE = re.compile(r"unable\s+to\s+judge", re.IGNORECASE)
_SCORE = re.compile(
    r"veracity\s*score\s*\**\s*[:：]?\s*\**\s*(\d{1,3}(?:\.\d+)?)\s*%?"
    r"(?:\s*\(\s*([^()\n]{1,40}?)\s*\))?",
    re.IGNORECASE,
)
_FALSE_PART = re.compile(r"false\s*part\s*[:：]\s*", re.IGNORECASE)
_REASON = re.compile(r"\breason(?:ing)?\s*[:：]\s*", re.IGNORECASE)
_EMPTY_PHRASES = {"", "/", "none", "n/a", "na", "-", "—", "null", "nothing"}
_QUOTES = "\"'“”‘’`*"


def _clean(text: str) -> str:
    text = _FENCE.sub("", text).strip()
    return _OUTPUT_PREFIX.sub("", text, count=1).strip()


def _squash(text: str) -> str:
    return " ".join(text.split())


def _score_value(token: str) -> Optional[int]:
    value = round_half_up(Fraction(token))
    return value if 0 <= value <= 100 else None


def _split_false_part(tail: str) -> tuple[str, str]:
    """Split the text after "False Part:" into (phrase, reason)."""
    reason_match = _REASON.search(tail)
    if reason_match:
        phrase_zone, reason = tail[:reason_match.start()], tail[reason_match.end():]
    else:
        first_line, _, rest = tail.partition("\n")
        phrase_zone, reason = first_line, rest
    phrase = phrase_zone.strip().rstrip(",;").strip().strip(_QUOTES).strip()
    if reason_match is None and phrase.endswith("."):
        # a trailing sentence stop belongs to the answer, not the phrase
        phrase = phrase[:-1].rstrip()
    return phrase, _squash(reason).lstrip(",;:-— ").strip()


def parse_verdict(raw: Union[RawAnswer, str], sentence: Optional[str] = None) -> Verdict:
    """Read one model answer.

    Recognized forms, matched case-insensitively:

    * ``Veracity score: 80% (Mostly True), False Part: <phrase>`` with an
      optional reason (``Reason: ...`` or the lines after the false part);
      a phrase of ``/`` or nothing means no false part
    * ``null`` alone: the statement is not verifiable
    * ``Unable to judge`` with no score

    When the label disagrees with the score's band the score is kept and a
    warning is recorded. If ``sentence`` is given the false part is located
    in it.
    """
    text = raw.text if isinstance(raw, RawAnswer) else raw
    if not isinstance(text, str):
        raise VerdictParseError("answer is not text", repr(text))
    body = _clean(text)

    if _NULL.match(body):
        return Verdict.non_verifiable()

    score_match = _SCORE.search(body)
    score = _score_value(score_match.group(1)) if score_match else None
    if score is None:
        unable = _UNABLE.search(body)
        if unable:
            reason = _squash(body[unable.end():]).lstrip(".:,;- ").strip()
            return Verdict.unable(reason=reason)
        if score_match:
            raise VerdictParseError(f"veracity score out of range: {score_match.group(1)}", text)
        raise VerdictParseError("no veracity score, null or unable-to-judge marker found", text)

    warnings = []
    label_text = score_match.group(2)
    expected = label_from_score(score)
    if label_text:
        stated = VeracityLabel.parse(label_text)
        if stated is None:
            warnings.append(f"unrecognized label {label_text!r}; using {expected.value}")
        elif stated is not expected:
            warnings.append(f"label {stated.value} conflicts with score {score}%; using {expected.value}")

    after = body[score_match.end():]
    fp_match = _FALSE_PART.search(after)
    phrase = ""
    if fp_match:
        phrase, reason = _split_false_part(after[fp_match.end():])
    else:
        reason_match = _REASON.search(after)
        reason = _squash(after[reason_match.end():] if reason_match else after).lstrip(",;:.-— ").strip()

    parts: tuple[FalsePart, ...] = ()
    if phrase.casefold() not in _EMPTY_PHRASES:
        parts = (FalsePart(phrase),)
        if sentence is not None:
            parts = locate_parts(sentence, phrase)
    return Verdict.judged(score, parts, reason, warnings)


# --- locating false parts -----------------------------------------------------

_TOKEN = re.compile(r"\w+")


def _tokens(text: str) -> list[tuple[str, int, int]]:
    return [(m.group().casefold(), m.start(), m.end()) for m in _TOKEN.finditer(text)]


def _locate(sentence: str, phrase: str) -> Optional[tuple[tuple[int, int], str]]:
    phrase = phrase.strip()
    if not phrase:
        return None
    at = sentence.find(phrase)
    if at >= 0:
        return (at, at + len(phrase)), "exact"
    match = re.search(re.escape(phrase), sentence, re.IGNORECASE)
    if match:
        return match.span(), "casefold"
    words = phrase.split()
    pattern = r"\s+".join(re.escape(w) for w in words)
    match = re.search(pattern, sentence, re.IGNORECASE)
    if match:
        return match.span(), "whitespace"

    wanted = _tokens(phrase)
    have = _tokens(sentence)
    if not wanted or not have:
        return None
    # longest common contiguous token run, first occurrence in the sentence wins
    best_len, best_end = 0, -1
    prev = [0] * (len(wanted) + 1)
    for i in range(1, len(have) + 1):
        cur = [0] * (len(wanted) + 1)
        for j in range(1, len(wanted) + 1):
            if have[i - 1][0] == wanted[j - 1][0]:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best_len:
                    best_len, best_end = cur[j], i
        prev = cur
    if best_len and best_len >= FUZZY_THRESHOLD * len(wanted):
        first = have[best_end - best_len]
        last = have[best_end - 1]
        return (first[1], last[2]), "fuzzy"
    return None


def locate_false_part(sentence: str, phrase: str) -> Optional[tuple[int, int]]:
    """Character range of ``phrase`` in ``sentence``, or None.

    Tried in order: exact substring, case-insensitive, whitespace-insensitive,
    then the longest common run of word tokens if it covers at least 80% of
    the phrase's tokens.

    >>> locate_false_part("Clint Eastwood said Hollywood is ...", "Clint Eastwood said")
    (0, 19)
    """
    found = _locate(sentence, phrase)
    return found[0] if found else None


def locate_parts(sentence: str, phrase: str) -> tuple[FalsePart, ...]:
    """Locate a false-part phrase, splitting it on ", " when every fragment
    locates on its own without overlap."""
    if ", " in phrase:
        fragments = [f.strip().strip(_QUOTES).strip() for f in phrase.split(", ")]
        if all(fragments):
            found = [_locate(sentence, f) for f in fragments]
            if all(found):
                spans = sorted(hit[0] for hit in found)
                if all(a[1] <= b[0] for a, b in zip(spans, spans[1:])):
                    return tuple(FalsePart(f, hit[0], hit[1]) for f, hit in zip(fragments, found))
    hit = _locate(sentence, phrase)
    if hit is None:
        return (FalsePart(phrase),)
    return (FalsePart(phrase, hit[0], hit[1]),)


def attach_spans(verdict: Verdict, sentence: str) -> Verdict:
    """Re-locate a verdict's false parts in ``sentence``."""
    if not verdict.false_parts:
        return verdict
    phrase = ", ".join(part.text for part in verdict.false_parts)
    return Verdict.judged(verdict.score, locate_parts(sentence, phrase), verdict.reason, verdict.warnings)
