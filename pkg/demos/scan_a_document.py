"""Assess a small web page sentence by sentence and write the annotated report."""

import sys
import tempfile
from pathlib import Path

from verity import Judge, assess_document, extract, render_html, render_json
from verity.ingest import DocKind
from verity.provider import MockBackend

page = b"""<html><head><title>Fun facts</title><script>track()</script></head>
<body>
<h1>Fun facts</h1>
<p>Water boils at 100 degrees Celsius at sea level. Bats are blind.</p>
<p>Goldfish have a three-second memory. The Pacific is the largest ocean on Earth.</p>
</body></html>"""

answers = {
    "Water boils at 100 degrees Celsius at sea level.": "Veracity score: 100% (True), False Part: /",
    "Bats are blind.": "Veracity score: 30% (Mostly False), False Part: blind, Reason: Most bats see well.",
    "Goldfish have a three-second memory.": "Veracity score: 0% (False), False Part: three-second memory",
    "The Pacific is the largest ocean on Earth.": "Veracity score: 100% (True), False Part: /",
}

doc = extract(page, DocKind.HTML, origin="fun-facts.html")
print("extracted text:")
print(doc.text)
print()

# headings and other non-claims fall through to "null" and are left out of the score
judge = Judge(MockBackend(answers, default="null"))
report = assess_document(doc, judge)

for sentence, item in zip(report.sentences, report.verdicts):
    v = item.verdict
    score = f"{v.score:3d}%" if v.is_judged else " n/a"
    print(f"{score}  {sentence.text}")
print()
print(f"Global Veracity: {report.global_score.mean_percent}%")
print(f"running score:   {report.global_score.prefix_series}")

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="verity-"))
out.mkdir(parents=True, exist_ok=True)
(out / "report.json").write_bytes(render_json(report))
(out / "report.html").write_text(render_html(report), "utf-8")
print(f"wrote {out / 'report.html'}")
