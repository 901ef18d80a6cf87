"""Verdict types, score/label mapping and local-to-global score aggregation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence


class DomainError(ValueError):
    """A precondition on an input value was violated."""


class VeracityLabel(enum.Enum):
    FALSE = "False"
    MOSTLY_FALSE = "Mostly False"
    MOSTLY_TRUE = "Mostly True"
    TRUE = "True"

    @property
    def anchor_score(self) -> int:
        return _ANCHORS[self]

    @property
    def rank(self) -> int:
        """Position in the truthfulness ordering, False=0 .. True=3."""
        return _ORDER.index(self)

    @classmethod
    def parse(cls, text: str) -> Optional["VeracityLabel"]:
        key = " ".join(text.replace("-", " ").replace("_", " ").split()).casefold()
        return _LABEL_NAMES.get(key)


_ANCHORS = {
    VeracityLabel.TRUE: 100,
    VeracityLabel.MOSTLY_TRUE: 80,
    VeracityLabel.MOSTLY_FALSE: 30,
    VeracityLabel.FALSE: 0,
}
_ORDER = [VeracityLabel.FALSE, VeracityLabel.MOSTLY_FALSE, VeracityLabel.MOSTLY_TRUE, VeracityLabel.TRUE]
_LABEL_NAMES = {label.value.casefold(): label for label in VeracityLabel}

# Upper bound (inclusive) of each band, checked in order.
LABEL_BANDS = (
    (15, VeracityLabel.FALSE),
    (49, VeracityLabel.MOSTLY_FALSE),
    (85, VeracityLabel.MOSTLY_TRUE),
    (100, VeracityLabel.TRUE),
)


def label_from_score(score: int) -> VeracityLabel:
    """Map an integer percent to its label band.

    >>> label_from_score(30)
    <VeracityLabel.MOSTLY_FALSE: 'Mostly False'>
    """
    if isinstance(score, bool) or not isinstance(score, int):
        raise DomainError(f"score must be an integer percent, got {score!r}")
    if not 0 <= score <= 100:
        raise DomainError(f"score out of range 0..100: {score}")
    for upper, label in LABEL_BANDS:
        if score <= upper:
            return label
    raise AssertionError("unreachable")


def round_half_up(value: Fraction) -> int:
    return math.floor(value + Fraction(1, 2))


class Outcome(enum.Enum):
    JUDGED = "judged"
    NON_VERIFIABLE = "non_verifiable"
    UNABLE_TO_JUDGE = "unable_to_judge"


class Strategy(enum.Enum):
    FEW_SHOT = "fewshot"
    AGENT = "agent"


@dataclass(frozen=True)
class FalsePart:
    """A phrase of the judged sentence flagged as incorrect or ambiguous.

    ``span`` is a half-open character range into the sentence, present only
    when the phrase could be located; ``match`` names the locator tier that
    found it.
    """

    text: str
    span: Optional[tuple[int, int]] = None
    match: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.text:
            raise DomainError("false part text must be non-empty")
        if self.span is not None:
            start, end = self.span
            if not 0 <= start < end:
                raise DomainError(f"invalid false part span {self.span}")

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "span": list(self.span) if self.span is not None else None,
            "match": self.match,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FalsePart":
        span = data.get("span")
        return cls(data["text"], tuple(span) if span is not None else None, data.get("match"))


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    score: Optional[int] = None
    label: Optional[VeracityLabel] = None
    false_parts: tuple[FalsePart, ...] = ()
    reason: str = ""
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.outcome is Outcome.JUDGED:
            expected = label_from_score(self.score)
            if self.label is None:
                object.__setattr__(self, "label", expected)
            elif self.label is not expected:
                raise DomainError(f"label {self.label.value} does not match score {self.score}")
        elif self.score is not None or self.label is not None or self.false_parts:
            raise DomainError(f"{self.outcome.value} verdict cannot carry a score or false part")

    @classmethod
    def judged(
        cls,
        score: int,
        false_parts: Iterable[FalsePart] = (),
        reason: str = "",
        warnings: Iterable[str] = (),
    ) -> "Verdict":
        return cls(Outcome.JUDGED, score, None, tuple(false_parts), reason, tuple(warnings))

    @classmethod
    def non_verifiable(cls, reason: str = "", warnings: Iterable[str] = ()) -> "Verdict":
        return cls(Outcome.NON_VERIFIABLE, reason=reason, warnings=tuple(warnings))

    @classmethod
    def unable(cls, reason: str = "", warnings: Iterable[str] = ()) -> "Verdict":
        return cls(Outcome.UNABLE_TO_JUDGE, reason=reason, warnings=tuple(warnings))

    @property
    def is_judged(self) -> bool:
        return self.outcome is Outcome.JUDGED

    @property
    def false_part(self) -> Optional[FalsePart]:
        return self.false_parts[0] if self.false_parts else None

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "score": self.score,
            "label": self.label.value if self.label is not None else None,
            "false_parts": [part.to_dict() for part in self.false_parts],
            "reason": self.reason,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Verdict":
        label = data.get("label")
        return cls(
            Outcome(data["outcome"]),
            data.get("score"),
            VeracityLabel(label) if label is not None else None,
            tuple(FalsePart.from_dict(p) for p in data.get("false_parts", ())),
            data.get("reason", ""),
            tuple(data.get("warnings", ())),
        )


@dataclass(frozen=True)
class SentenceVerdict:
    sentence_index: int
    verdict: Verdict


@dataclass(frozen=True)
class GlobalScore:
    judged_count: int
    excluded_count: int
    mean_percent: Optional[int]
    prefix_series: tuple[Optional[int], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "judged_count": self.judged_count,
            "excluded_count": self.excluded_count,
            "mean_percent": self.mean_percent,
            "prefix_series": list(self.prefix_series),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GlobalScore":
        return cls(
            data["judged_count"],
            data["excluded_count"],
            data["mean_percent"],
            tuple(data["prefix_series"]),
        )


def _check_dense(verdicts: Sequence[SentenceVerdict]) -> None:
    for position, item in enumerate(verdicts):
        if item.sentence_index != position:
            raise DomainError(
                f"verdicts must be densely indexed: position {position} has index {item.sentence_index}"
            )


def prefix_scores(verdicts: Sequence[SentenceVerdict]) -> list[Optional[int]]:
    """Running global score after each sentence; ``None`` until something is judged."""
    _check_dense(verdicts)
    series: list[Optional[int]] = []
    total = 0
    count = 0
    for item in verdicts:
        if item.verdict.is_judged:
            total += item.verdict.score
            count += 1
        series.append(round_half_up(Fraction(total, count)) if count else None)
    return series


def global_score(verdicts: Sequence[SentenceVerdict]) -> GlobalScore:
    """Unweighted mean over judged sentences, rounded half-up to an integer percent.

    Non-verifiable and unable-to-judge sentences are left out of both the sum
    and the count.
    """
    series = prefix_scores(verdicts)
    judged = sum(1 for item in verdicts if item.verdict.is_judged)
    return GlobalScore(
        judged_count=judged,
        excluded_count=len(verdicts) - judged,
        mean_percent=series[-1] if series else None,
        prefix_series=tuple(series),
    )
