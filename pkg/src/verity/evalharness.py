"""Accuracy evaluation over labeled fact-check statements."""

from __future__ import annotations

import csv
import enum
import json
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .claims import Outcome, VeracityLabel, Verdict, label_from_score, round_half_up
from .pipeline import Judge

log = logging.getLogger(__name__)

REQUIRED = ("id", "statement", "label")
# Accepted alternative column names, e.g. the politifact Kaggle export uses "verdict".
ALIASES = {"label": ("label", "verdict", "ground_truth", "ruling"), "statement": ("statement", "claim", "text"), "id": ("id",)}


class DatasetError(ValueError):
    pass


class DatasetWarning(UserWarning):
    pass


class GroundLabel(enum.Enum):
    TRUE = "true"
    MOSTLY_TRUE = "mostly-true"
    HALF_TRUE = "half-true"
    BARELY_TRUE = "barely-true"
    MOSTLY_FALSE = "mostly-false"
    FALSE = "false"
    PANTS_FIRE = "pants-fire"

    @classmethod
    def normalize(cls, text: str) -> Optional["GroundLabel"]:
        key = "-".join(str(text).strip().lower().replace("_", " ").replace("-", " ").split())
        key = _LABEL_SYNONYMS.get(key, key)
        try:
            return cls(key)
        except ValueError:
            return None


_LABEL_SYNONYMS = {"pants-on-fire": "pants-fire", "pants-on-fire!": "pants-fire", "half": "half-true"}

COARSE_GROUND = {
    GroundLabel.TRUE: VeracityLabel.TRUE,
    GroundLabel.MOSTLY_TRUE: VeracityLabel.MOSTLY_TRUE,
    GroundLabel.HALF_TRUE: VeracityLabel.MOSTLY_TRUE,
    GroundLabel.MOSTLY_FALSE: VeracityLabel.MOSTLY_FALSE,
    GroundLabel.BARELY_TRUE: VeracityLabel.MOSTLY_FALSE,
    GroundLabel.FALSE: VeracityLabel.FALSE,
    GroundLabel.PANTS_FIRE: VeracityLabel.FALSE,
}


@dataclass(frozen=True)
class LabeledStatement:
    id: str
    statement: str
    ground_label: GroundLabel


class Correctness(enum.Enum):
    CORRECT = "correct"
    WRONG = "wrong"
    UNABLE = "unable"


MODES = ("polarity", "coarse")


def judge_correctness(
    verdict: Verdict,
    ground: GroundLabel,
    mode: str = "polarity",
    half_true_truthful: bool = True,
) -> Correctness:
    """Score one verdict against its ground label.

    polarity: truthful prediction means score >= 50, truthful ground means
    true / mostly-true / half-true; correct when the sides agree.
    coarse: the score's label band must equal the ground label's tier.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if verdict.outcome is not Outcome.JUDGED:
        return Correctness.UNABLE
    if mode == "polarity":
        truthful_ground = {GroundLabel.TRUE, GroundLabel.MOSTLY_TRUE}
        if half_true_truthful:
            truthful_ground.add(GroundLabel.HALF_TRUE)
        agree = (verdict.score >= 50) == (ground in truthful_ground)
    else:
        agree = label_from_score(verdict.score) is COARSE_GROUND[ground]
    return Correctness.CORRECT if agree else Correctness.WRONG


@dataclass(frozen=True)
class EvalSummary:
    total: int
    correct: int
    wrong: int
    unable: int

    def __post_init__(self) -> None:
        if min(self.total, self.correct, self.wrong, self.unable) < 0:
            raise ValueError("counts must be non-negative")
        if self.total != self.correct + self.wrong + self.unable:
            raise ValueError("total must equal correct + wrong + unable")

    @classmethod
    def from_counts(cls, correct: int, wrong: int, unable: int) -> "EvalSummary":
        return cls(correct + wrong + unable, correct, wrong, unable)

    @property
    def accuracy_percent(self) -> Optional[int]:
        """correct / (correct + wrong) as a whole percent; unjudgeable items don't count."""
        judged = self.correct + self.wrong
        if judged == 0:
            return None
        return round_half_up(Fraction(100 * self.correct, judged))

    @property
    def accuracy_text(self) -> str:
        acc = self.accuracy_percent
        return "n/a" if acc is None else f"{acc}%"

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "wrong": self.wrong,
            "unable": self.unable,
            "accuracy_percent": self.accuracy_percent,
        }


@dataclass
class EvalRecord:
    item: LabeledStatement
    raw_answer: str
    verdict: Verdict
    correctness: Correctness
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.item.id,
            "statement": self.item.statement,
            "ground_label": self.item.ground_label.value,
            "raw_answer": self.raw_answer,
            "verdict": self.verdict.to_dict(),
            "correctness": self.correctness.value,
            "warnings": list(self.warnings),
        }


def _resolve_columns(fields: Sequence[str], where: str) -> dict[str, str]:
    present = {f.strip().lower(): f for f in fields if f}
    mapping = {}
    for name in REQUIRED:
        found = next((present[a] for a in ALIASES[name] if a in present), None)
        if found is None:
            raise DatasetError(f"{where}: missing required column {name!r}")
        mapping[name] = found
    return mapping


def _rows(path: Path, fmt: str):
    if fmt == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DatasetError(f"{path}: empty dataset")
            columns = _resolve_columns(reader.fieldnames, str(path))
            for number, row in enumerate(reader, 2):
                yield number, {k: row.get(v) for k, v in columns.items()}
    else:
        with path.open(encoding="utf-8") as fh:
            for number, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except ValueError as err:
                    raise DatasetError(f"{path}:{number}: invalid JSON ({err})") from None
                if not isinstance(obj, dict):
                    raise DatasetError(f"{path}:{number}: expected an object")
                columns = _resolve_columns(list(obj), f"{path}:{number}")
                yield number, {k: obj[v] for k, v in columns.items()}


def load_dataset(path: Union[str, Path], fmt: Optional[str] = None) -> list[LabeledStatement]:
    """Read labeled statements from CSV (header row) or JSON lines.

    Rows with unknown labels or empty statements are skipped with a
    DatasetWarning. A missing column or an empty result is a DatasetError.
    """
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson", ".json") else "csv"
    if fmt not in ("csv", "jsonl"):
        raise DatasetError(f"unsupported dataset format {fmt!r}")
    if not path.exists():
        raise DatasetError(f"{path}: no such file")

    items = []
    for number, row in _rows(path, fmt):
        label = GroundLabel.normalize(row["label"] or "")
        statement = str(row["statement"] or "").strip()
        if label is None:
            warnings.warn(f"{path}:{number}: unknown label {row['label']!r}, row skipped", DatasetWarning, stacklevel=2)
            continue
        if not statement:
            warnings.warn(f"{path}:{number}: empty statement, row skipped", DatasetWarning, stacklevel=2)
            continue
        items.append(LabeledStatement(str(row["id"]), statement, label))
    if not items:
        raise DatasetError(f"{path}: dataset has no usable rows")
    return items


def summarize(outcomes: Iterable[Correctness]) -> EvalSummary:
    counts = {c: 0 for c in Correctness}
    for outcome in outcomes:
        counts[outcome] += 1
    return EvalSummary.from_counts(counts[Correctness.CORRECT], counts[Correctness.WRONG], counts[Correctness.UNABLE])


def run_eval(
    dataset: Sequence[LabeledStatement],
    judge: Judge,
    mode: str = "polarity",
    *,
    max_workers: int = 4,
    half_true_truthful: bool = True,
) -> tuple[EvalSummary, list[EvalRecord]]:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")

    def one(item: LabeledStatement) -> EvalRecord:
        judgment = judge.check_lenient(item.statement)
        outcome = judge_correctness(judgment.verdict, item.ground_label, mode, half_true_truthful)
        for w in judgment.warnings:
            log.warning("%s: %s", item.id, w)
        return EvalRecord(item, judgment.raw, judgment.verdict, outcome, list(judgment.warnings))

    if max_workers <= 1:
        records = [one(item) for item in dataset]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            records = list(pool.map(one, dataset))
    return summarize(r.correctness for r in records), records


TABLE_HEADER = "method | total | correct | wrong | unable | accuracy"


def format_row(method: str, summary: EvalSummary) -> str:
    return (
        f"{method} | {summary.total} | {summary.correct} | {summary.wrong} | "
        f"{summary.unable} | accuracy {summary.accuracy_text}"
    )


def write_outputs(out_dir: Union[str, Path], summary: EvalSummary, records: Sequence[EvalRecord], **meta) -> tuple[Path, Path]:
    """Write ``summary.json`` and per-item ``items.jsonl``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_path = out / "summary.json"
    items_path = out / "items.jsonl"
    summary_path.write_text(json.dumps({**meta, **summary.to_dict()}, ensure_ascii=False, indent=2) + "\n", "utf-8")
    with items_path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
    return summary_path, items_path
