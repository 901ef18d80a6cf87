"""Score a strategy against labeled statements and print an accuracy row.

Items the model can't judge (null, "Unable to judge", unparseable answers)
are counted separately and left out of the accuracy denominator.
"""

from verity.evalharness import (
    TABLE_HEADER,
    GroundLabel,
    LabeledStatement,
    format_row,
    run_eval,
)
from verity.pipeline import Judge
from verity.provider import MockBackend

rows = [
    ("1", "Water boils at 100 degrees Celsius at sea level.", "true", "Veracity score: 100% (True), False Part: /"),
    ("2", "Humans use only ten percent of their brains.", "pants-fire", "Veracity score: 0% (False), False Part: only ten percent"),
    ("3", "Venus is the hottest planet in the solar system.", "true", "Veracity score: 80% (Mostly True), False Part: /"),
    ("4", "Sugar makes children hyperactive.", "false", "Veracity score: 80% (Mostly True), False Part: /"),
    ("5", "The mayor privately favors the stadium project.", "mostly-true", "Unable to judge."),
]

dataset = [LabeledStatement(i, text, GroundLabel.normalize(label)) for i, text, label, _ in rows]
judge = Judge(MockBackend({text: answer for _, text, _, answer in rows}))

print(TABLE_HEADER)
for mode in ("polarity", "coarse"):
    summary, records = run_eval(dataset, judge, mode)
    print(format_row(f"mock ({mode})", summary))

print()
for record in records:
    print(f"{record.item.id}: {record.correctness.value:7s} ground={record.item.ground_label.value}")
