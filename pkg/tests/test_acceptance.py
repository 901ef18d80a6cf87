"""End-to-end acceptance gate, one test per criterion.

Each test records PASS or FAIL in ``conftest.ACCEPTANCE_RESULTS``; the
terminal summary prints one line per criterion.
"""

import json
import time
from contextlib import contextmanager
from datetime import datetime, timezone

import conftest
import test_claims
import test_parsing
import test_report
import test_segment
from conftest import FIXTURES, GOLDEN
from stubs import ScriptedChat, StubServer, TelegramStub
from test_gateway import verdict_for
from test_provider import LockstepClock, backend_for, request
from test_report import Page
from verity.claims import Outcome, Strategy, VeracityLabel, global_score, label_from_score
from verity.evalharness import EvalSummary, GroundLabel, LabeledStatement, run_eval, write_outputs
from verity.gateway.bot import FactCheckBot, TelegramClient, format_reply
from verity.ingest import DocKind, extract
from verity.parsing import parse_verdict
from verity.pipeline import Judge
from verity.prompting import build_fewshot_prompt
from verity.provider import AuthError, FixtureSearch, MockBackend, RecordReplayBackend, SearchResult
from verity.report import assess_document, render_html, render_json

FIXED = datetime(2024, 5, 1, tzinfo=timezone.utc)


@contextmanager
def criterion(number, text):
    try:
        yield
    except BaseException:
        conftest.ACCEPTANCE_RESULTS[number] = (False, text)
        print(f"criterion {number}: FAIL  {text}")
        raise
    conftest.ACCEPTANCE_RESULTS[number] = (True, text)
    print(f"criterion {number}: PASS  {text}")


def test_criterion_1_accuracy_arithmetic():
    with criterion(1, "accuracy arithmetic (20,14,3,3) -> 82% and (20,16,3,1) -> 84%"):
        start = time.perf_counter()
        few = EvalSummary(20, 14, 3, 3)
        agent = EvalSummary(20, 16, 3, 1)
        assert few.accuracy_percent == 82
        assert agent.accuracy_percent == 84
        assert time.perf_counter() - start < 1


def test_criterion_2_example_outputs_parse():
    with criterion(2, "parser reproduces the five example triples, null and unable-to-judge"):
        expected = [
            ("Veracity score: 100% (True), False Part: /", (100, VeracityLabel.TRUE, None)),
            ("Veracity score: 0% (False), False Part: Clint Eastwood said", (0, VeracityLabel.FALSE, "Clint Eastwood said")),
            ("Veracity score: 30% (Mostly False), False Part: did not keep", (30, VeracityLabel.MOSTLY_FALSE, "did not keep")),
            ("Veracity score: 0%(False), False Part: rioting now over sanctuary cities",
             (0, VeracityLabel.FALSE, "rioting now over sanctuary cities")),
            ("Veracity score: 80% (Mostly True), False Part: fallen behind", (80, VeracityLabel.MOSTLY_TRUE, "fallen behind")),
        ]
        for raw, triple in expected:
            verdict = parse_verdict(raw)
            got = (verdict.score, verdict.label, verdict.false_part.text if verdict.false_part else None)
            assert got == triple, raw
        assert parse_verdict("null").outcome is Outcome.NON_VERIFIABLE
        assert parse_verdict("Unable to judge.").outcome is Outcome.UNABLE_TO_JUDGE


def test_criterion_3_prompt_golden():
    with criterion(3, "default prompt is byte-identical to the golden file"):
        statement = ('The Wisconsin Retirement System for public employees is "a self-funded pension plan" '
                     'and "it the money of the workers that funds it.')
        assert build_fewshot_prompt(statement).encode("utf-8") == (GOLDEN / "fewshot_wisconsin.txt").read_bytes()


# --- criterion 4 -----------------------------------------------------------------


def verdict_row_backends():
    """Mock model and search answering with the recorded verdict rows."""
    rows = json.loads((FIXTURES / "verdict_rows.json").read_text("utf-8"))["rows"]
    answers = {"fewshot": {}, "agent": {}}
    plans, search = {}, {}
    for row in rows:
        label = VeracityLabel.parse(row["label"])
        answers[row["method"]][row["statement"]] = (
            f"Veracity score: {label.anchor_score}% ({label.value}), "
            f"False Part: {row['false_part'] or '/'}, Reason: {row['reason']}"
        )
        query = " ".join(row["statement"].split()[:6]).strip('"')
        plans[row["statement"]] = f"1. {query}"
        search[query] = [SearchResult(f"Result for {query}", f"https://example.org/{len(search)}", row["reason"])]
    statements = list(dict.fromkeys(row["statement"] for row in rows))
    grounds = {row["statement"]: row["ground_truth"] for row in rows}
    return answers, plans, FixtureSearch(search), statements, grounds


def run_pipeline(cache, statements, grounds, workers, strategy):
    backend = RecordReplayBackend(None, cache, "replay")
    judge = Judge(backend, backend, strategy)
    dataset = [LabeledStatement(f"t{i}", s, GroundLabel.normalize(grounds[s])) for i, s in enumerate(statements)]
    summary, records = run_eval(dataset, judge, max_workers=workers)
    doc = extract("\n\n".join(statements).encode("utf-8"), DocKind.PLAINTEXT, "rows.txt")
    report = assess_document(doc, judge, max_workers=workers, created_at=FIXED)
    return summary, records, render_json(report) + render_html(report).encode("utf-8")


class _Pair:
    def __init__(self, model, search):
        self.model, self.searcher = model, search

    def complete(self, req):
        return self.model.complete(req)

    def search(self, query, k=5):
        return self.searcher.search(query, k)


def run_pipeline_live(backend, statements, grounds, strategy):
    judge = Judge(backend, backend, strategy)
    dataset = [LabeledStatement(f"t{i}", s, GroundLabel.normalize(grounds[s])) for i, s in enumerate(statements)]
    run_eval(dataset, judge, max_workers=1)
    doc = extract("\n\n".join(statements).encode("utf-8"), DocKind.PLAINTEXT, "rows.txt")
    assess_document(doc, judge, max_workers=1, created_at=FIXED)


def test_criterion_4_replay_byte_stability(tmp_path):
    with criterion(4, "replay of recorded verdict rows is byte-stable over 3 runs and concurrency 1 vs 4"):
        start = time.perf_counter()
        answers, plans, search, statements, grounds = verdict_row_backends()
        cache = tmp_path / "verdict_rows.jsonl"
        for strategy in Strategy:
            model = MockBackend(answers[strategy.value], plans)
            recorder = RecordReplayBackend(_Pair(model, search), cache, "record")
            run_pipeline_live(recorder, statements, grounds, strategy)

        for strategy in Strategy:
            outputs = set()
            for n, workers in enumerate((1, 4, 1, 4)):
                summary, records, report_bytes = run_pipeline(cache, statements, grounds, workers, strategy)
                out = tmp_path / f"{strategy.value}{n}"
                paths = write_outputs(out, summary, records, strategy=strategy.value)
                outputs.add(tuple(p.read_bytes() for p in paths) + (report_bytes,))
            assert len(outputs) == 1, strategy
            # ground truth is mostly-true for all three; only the McCain verdicts sit on the truthful side
            assert (summary.correct, summary.wrong, summary.unable) == (1, 2, 0)
        assert time.perf_counter() - start < 10


# --- criterion 5 -----------------------------------------------------------------

PROPERTY_TESTS = [
    test_claims.test_global_score_properties,
    test_claims.test_excluded_permutation_leaves_mean_unchanged,
    test_claims.test_appending_the_mean_keeps_it,
    test_claims.test_single_verdict_global_equals_score,
    test_claims.test_label_monotone,
    test_segment.test_coverage_and_idempotence,
    test_segment.test_coverage_and_idempotence_with_length_cap,
    test_segment.test_arbitrary_unicode_coverage,
    test_parsing.test_parser_never_panics,
    test_report.test_json_round_trip_property,
]


def test_criterion_5_property_suite():
    with criterion(5, "property suite, 1000 generated cases each, under 60s"):
        start = time.perf_counter()
        for prop in PROPERTY_TESTS:
            assert prop._hypothesis_internal_use_settings.max_examples >= 1000, prop.__name__
            prop()
        # label totality and anchors over every score
        for score in range(101):
            assert label_from_score(score) is test_claims.band_oracle(score)
        for label in VeracityLabel:
            assert label_from_score(label.anchor_score) is label
        assert time.perf_counter() - start < 60


def test_criterion_6_rendering_structure():
    with criterion(6, "six-sentence rendering: marks, blue highlight iff 0%, badge, escaping"):
        model = MockBackend(json.loads((FIXTURES / "mock_backend.json").read_text("utf-8"))["answers"])
        doc = extract((FIXTURES / "doc6.txt").read_bytes(), DocKind.PLAINTEXT, "doc6.txt")
        report = assess_document(doc, Judge(model), created_at=FIXED)
        assert len(report.sentences) == 6
        markup = render_html(report)
        page = Page(markup)
        located = [p for v in report.verdicts for p in v.verdict.false_parts if p.span is not None]
        assert len(page.marks) == len(located)
        for shown, item in zip(page.sentences, report.verdicts):
            assert ("zero-score" in shown["classes"]) == (item.verdict.score == 0)
        mean = global_score(report.verdicts).mean_percent
        assert page.badge == f"{mean}%"
        assert "&lt;b&gt;bold&lt;/b&gt;" in markup and "<b>bold" not in markup
        assert [s["text"] for s in page.sentences] == [s.text for s in report.sentences]


def test_criterion_7_bot_end_to_end():
    with criterion(7, "bot: one reply per statement, duplicates ignored, 500s retried"):
        start = time.perf_counter()
        stub = TelegramStub()
        with StubServer(stub) as server:
            bot = FactCheckBot(TelegramClient(server.url, stub.token), verdict_for, poll_timeout=0, sleep=lambda s: None)
            update_id = stub.enqueue(42, "Bats are blind.")
            bot.poll_once()
            assert stub.sent == [(42, format_reply(verdict_for("Bats are blind.")))]
            stub.redeliver(update_id, 42, "Bats are blind.")
            bot.poll_once()
            assert len(stub.sent) == 1
            stub.fail_gets, stub.fail_sends = 1, 2
            stub.enqueue(42, "The sky is a solid dome.")
            while bot.poll_once() == 0 and stub.get_calls < 10:
                pass
            assert [chat for chat, _ in stub.sent] == [42, 42]
            assert "0% (False)" in stub.sent[1][1]
        assert time.perf_counter() - start < 10


def test_criterion_8_provider_discipline():
    with criterion(8, "provider: 429 retried, 401 not retried, rate limit held over 60s windows"):
        chat = ScriptedChat([(429, "slow"), (200, "ok")])
        with StubServer(chat) as server:
            backend, _ = backend_for(server.url)
            assert backend.complete(request()) == "ok" and chat.calls == 2

        chat = ScriptedChat([(401, "no")] * 3)
        with StubServer(chat) as server:
            backend, _ = backend_for(server.url)
            try:
                backend.complete(request())
            except AuthError:
                pass
            else:
                raise AssertionError("401 did not raise AuthError")
            assert chat.calls == 1

        clock = LockstepClock()

        def handler(method, path, query, body):
            clock.arrived()
            return 200, {"choices": [{"message": {"content": "ok"}}]}, {}

        with StubServer(handler) as server:
            backend, _ = backend_for(server.url, clock=clock, rate_limit=3)
            limiter = backend.transport.limiter
            original = limiter.acquire

            def acquire():
                # sequential callers: count once the slot is granted
                original()
                clock.admitted += 1

            limiter.acquire = acquire
            for i in range(10):
                backend.complete(request(str(i)))
        seen = sorted(clock.seen)
        assert len(seen) == 10
        assert all(len([t for t in seen[i:] if t < s + 60]) <= 3 for i, s in enumerate(seen))
