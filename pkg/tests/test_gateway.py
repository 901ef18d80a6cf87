import io
import json
import threading

import pytest

from conftest import FIXTURES
from stubs import ScriptedChat, StubServer, TelegramStub
from verity.claims import DomainError, Strategy, Verdict
from verity.gateway.bot import APOLOGY, USAGE, FactCheckBot, TelegramClient, format_reply
from verity.gateway.cli import main
from verity.gateway.config import load_config
from verity.gateway.fetch import FetchError, fetch_url
from verity.parsing import parse_verdict

MOCK = str(FIXTURES / "mock_backend.json")
CLINT = ('Clint Eastwood said Hollywood is "the place of traitors and pedophiles" and he decided to "leave" it '
         'to "fight against traitors with real American patriots with president Trump.')


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- check --------------------------------------------------------------------


def test_check_clint_eastwood(capsys):
    code, out, _ = run(capsys, "check", CLINT, "--backend", "mock", "--fixtures", MOCK)
    assert code == 0
    assert "Veracity score: 0% (False)" in out
    assert "False part: Clint Eastwood said" in out
    assert "Reason: —" in out


def test_check_json_mode(capsys):
    code, out, err = run(capsys, "check", "Bats are blind.", "--backend", "mock", "--fixtures", MOCK, "--json")
    assert code == 0 and err == ""
    data = json.loads(out)
    assert Verdict.from_dict(data["verdict"]).score == 30
    assert data["verdict"]["false_parts"][0]["span"] == [9, 14]


def test_check_exit_codes_follow_outcome(capsys, tmp_path):
    fixtures = tmp_path / "f.json"
    fixtures.write_text(json.dumps({"answers": {"A.": "null", "B.": "Unable to judge.", "C.": "what?"}}))
    assert run(capsys, "check", "A.", "--backend", "mock", "--fixtures", str(fixtures))[0] == 3
    assert run(capsys, "check", "B.", "--backend", "mock", "--fixtures", str(fixtures))[0] == 4
    code, _, err = run(capsys, "check", "C.", "--backend", "mock", "--fixtures", str(fixtures))
    assert code == 1 and "error" in err
    code, _, err = run(capsys, "check", "D.", "--backend", "mock", "--fixtures", str(fixtures))
    assert code == 1 and "no fixture answer" in err


@pytest.mark.parametrize("argv", [["check", ""], ["check", "   "], ["check", "x", "--backend", "mock"]])
def test_check_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_check_reads_stdin(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO("Bats are blind.\n"))
    code, out, _ = run(capsys, "check", "--backend", "mock", "--fixtures", MOCK)
    assert code == 0 and "30% (Mostly False)" in out


def test_check_agent_strategy(capsys):
    claim = 'MoveOn.org says "McCain opposes a woman\'s right to choose."'
    code, out, _ = run(capsys, "check", claim, "--strategy", "agent", "--backend", "mock", "--fixtures", MOCK, "--json")
    data = json.loads(out)
    assert code == 0 and data["agent_trace"]["step_count"] == 2 and data["strategy"] == "agent"


def test_check_against_live_stub(capsys, monkeypatch):
    chat = ScriptedChat([(200, "Veracity score: 80% (Mostly True), False Part: fallen behind")])
    with StubServer(chat) as server:
        monkeypatch.setenv("VERITY_MODEL_ENDPOINT", server.url + "/v1/chat/completions")
        code, out, _ = run(capsys, "check", "U.S. teenagers have now fallen behind.")
    assert code == 0 and "80% (Mostly True)" in out


def test_check_auth_failure_exit_1(capsys, monkeypatch):
    with StubServer(lambda *a: (401, {"error": "no"}, {})) as server:
        monkeypatch.setenv("VERITY_MODEL_ENDPOINT", server.url)
        code, _, err = run(capsys, "check", "Anything.")
    assert code == 1 and "rejected credentials" in err


# --- scan ---------------------------------------------------------------------


def test_scan_html_with_replay(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    cache = tmp_path / "cache.jsonl"
    page = str(FIXTURES / "page.html")
    assert run(capsys, "scan", page, "--backend", "record", "--fixtures", MOCK, "--cache", str(cache),
               "--out", str(tmp_path / "rec"))[0] == 0
    code, out, _ = run(capsys, "scan", page, "--backend", "replay", "--cache", str(cache), "--out", str(tmp_path / "out"))
    assert code == 0
    # Daily Facts is not verifiable; 100, 30 and 100 are judged
    assert out.strip() == "Global Veracity: 77%"
    html = (tmp_path / "out" / "report.html").read_text()
    assert 'class="badge"' in html and '<mark class="false-part">blind</mark>' in html
    assert "solid dome" not in html
    assert (tmp_path / "out" / "report.json").read_bytes() == (tmp_path / "rec" / "report.json").read_bytes()


def test_scan_srt_has_cue_timings(capsys, tmp_path):
    code, _, _ = run(capsys, "scan", str(FIXTURES / "talk.srt"), "--backend", "mock", "--fixtures", MOCK,
                     "--out", str(tmp_path))
    assert code == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["document"]["kind"] == "srt"
    assert [s["time_range"] for s in data["sentences"]] == [[1000, 4200], [5000, 8000]]


def test_scan_url_404_exit_1(capsys, tmp_path):
    with StubServer(lambda *a: (404, {"error": "missing"}, {})) as server:
        code, _, err = run(capsys, "scan", server.url + "/page", "--backend", "mock", "--fixtures", MOCK,
                           "--out", str(tmp_path))
    assert code == 1 and "404" in err


def test_scan_url_html(capsys, tmp_path):
    body = (FIXTURES / "page.html").read_bytes()

    def handler(method, path, query, payload):
        return 200, body, {"content-type": "text/html; charset=utf-8"}

    with StubServer(handler) as server:
        code, out, _ = run(capsys, "scan", server.url + "/article", "--backend", "mock", "--fixtures", MOCK,
                           "--out", str(tmp_path))
    assert code == 0 and out.strip() == "Global Veracity: 77%"


def test_scan_unsupported_kind_exit_2(capsys, tmp_path):
    blob = tmp_path / "data.bin"
    blob.write_bytes(b"\x00\x01\x02binary")
    assert run(capsys, "scan", str(blob), "--backend", "mock", "--fixtures", MOCK, "--out", str(tmp_path))[0] == 2


def test_scan_missing_file_exit_1(capsys, tmp_path):
    assert run(capsys, "scan", str(tmp_path / "nope.txt"), "--backend", "mock", "--fixtures", MOCK)[0] == 1


def test_render_from_report_json(capsys, tmp_path):
    run(capsys, "scan", str(FIXTURES / "doc6.txt"), "--backend", "mock", "--fixtures", MOCK, "--out", str(tmp_path))
    code, out, _ = run(capsys, "render", str(tmp_path / "report.json"))
    assert code == 0
    assert out == (tmp_path / "report.html").read_text()
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 9}')
    assert run(capsys, "render", str(bad))[0] == 1


# --- eval ---------------------------------------------------------------------


def test_eval_prints_table_row(capsys, tmp_path):
    code, out, _ = run(capsys, "eval", str(FIXTURES / "eval20.csv"), "--backend", "mock",
                       "--fixtures", str(FIXTURES / "eval20_mock.json"), "--method", "fewshot", "--out", str(tmp_path))
    assert code == 0
    header, row = out.strip().splitlines()
    assert row == "fewshot | 20 | 14 | 3 | 3 | accuracy 82%"
    assert "accuracy 82%" in out
    assert json.loads((tmp_path / "summary.json").read_text())["accuracy_percent"] == 82


def test_eval_coarse_mode(capsys):
    code, out, _ = run(capsys, "eval", str(FIXTURES / "eval20.jsonl"), "--backend", "mock",
                       "--fixtures", str(FIXTURES / "eval20_mock.json"), "--mode", "coarse", "--json")
    data = json.loads(out)
    assert code == 0 and (data["correct"], data["wrong"], data["unable"]) == (10, 7, 3)


def test_eval_missing_dataset_exit_1(capsys, tmp_path):
    code, _, err = run(capsys, "eval", str(tmp_path / "nope.csv"), "--backend", "mock", "--fixtures", MOCK)
    assert code == 1 and "no such file" in err


# --- config and fetch ---------------------------------------------------------


def test_config_file_and_env_overrides(tmp_path):
    path = tmp_path / "verity.json"
    path.write_text(json.dumps({"model_id": "gpt-4o", "strategy": "agent", "provider": {"max_attempts": 2}}))
    config = load_config(path, env={"VERITY_MODEL_ENDPOINT": "http://localhost:9/v1", "VERITY_BOT_API_BASE": "http://127.0.0.1:1"})
    assert config.model_id == "gpt-4o" and config.strategy is Strategy.AGENT
    assert config.provider.max_attempts == 2
    assert config.provider.endpoint == "http://localhost:9/v1"
    assert config.bot_api_base == "http://127.0.0.1:1"
    assert load_config(env={}).provider.auth_env_var == "VERITY_MODEL_KEY"


@pytest.mark.parametrize("data", [{"provider": {"key": "sk-x"}}, {"colour": "red"}, {"max_steps": 0}, {"bot_api_base": "ftp://x"}])
def test_config_rejections(tmp_path, data):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(data))
    with pytest.raises(DomainError):
        load_config(path, env={})


def test_fetch_redirect_limit_and_size_cap():
    def handler(method, path, query, body):
        if path.startswith("/loop"):
            return 302, b"", {"Location": "/loop" + str(len(path))}
        if path == "/hop":
            return 302, b"", {"Location": "/big"}
        return 200, b"x" * 2000, {"content-type": "text/plain"}

    with StubServer(handler) as server:
        with pytest.raises(FetchError, match="redirects"):
            fetch_url(server.url + "/loop")
        body, ctype = fetch_url(server.url + "/hop")
        assert len(body) == 2000 and ctype == "text/plain"
        with pytest.raises(FetchError, match="exceeds"):
            fetch_url(server.url + "/big", max_bytes=100)


# --- bot ----------------------------------------------------------------------


def verdict_for(text):
    answers = json.loads((FIXTURES / "mock_backend.json").read_text())["answers"]
    return parse_verdict(answers[text], sentence=text)


class BotHarness:
    def __init__(self, check=verdict_for):
        self.stub = TelegramStub()
        self.server = StubServer(self.stub)
        self.checked = []

        def counted(text):
            self.checked.append(text)
            return check(text)

        self.check = counted

    def __enter__(self):
        self.server.__enter__()
        client = TelegramClient(self.server.url, self.stub.token)
        self.bot = FactCheckBot(client, self.check, poll_timeout=0, sleep=lambda s: None)
        return self

    def __exit__(self, *exc):
        self.server.__exit__(*exc)


def test_bot_replies_once_with_verdict():
    with BotHarness() as h:
        h.stub.enqueue(7, "Bats are blind.")
        assert h.bot.poll_once() == 1
        assert h.bot.poll_once() == 0
    assert h.stub.sent == [(7, format_reply(verdict_for("Bats are blind.")))]
    assert "Veracity score: 30% (Mostly False)" in h.stub.sent[0][1]
    assert "False part: blind" in h.stub.sent[0][1]


def test_bot_ignores_duplicate_delivery():
    with BotHarness() as h:
        update_id = h.stub.enqueue(7, "Bats are blind.")
        h.stub.redeliver(update_id, 7, "Bats are blind.")
        h.bot.poll_once()
        h.stub.redeliver(update_id, 7, "Bats are blind.")
        h.bot.poll_once()
        h.bot.poll_once()
    assert len(h.stub.sent) == 1
    assert h.checked == ["Bats are blind."]
    assert h.stub.offsets[-1] == update_id + 1


def test_bot_retries_injected_500s():
    with BotHarness() as h:
        h.stub.fail_gets = 2
        h.stub.fail_sends = 3
        h.stub.enqueue(7, "Bats are blind.")
        handled = [h.bot.poll_once() for _ in range(4)]
    assert handled == [0, 0, 1, 0]
    assert len(h.stub.sent) == 1


def test_bot_help_skips_pipeline():
    with BotHarness() as h:
        h.stub.enqueue(1, "/help")
        h.stub.enqueue(1, "/start@VerityBot")
        h.bot.poll_once()
    assert h.stub.sent == [(1, USAGE), (1, USAGE)]
    assert h.checked == []


def test_bot_poison_message_gets_apology():
    def explode(text):
        raise RuntimeError("pipeline broke")

    with BotHarness(explode) as h:
        h.stub.enqueue(3, "anything")
        h.stub.enqueue(3, "/help")
        h.bot.poll_once()
    assert h.stub.sent == [(3, APOLOGY), (3, USAGE)]


def test_bot_per_chat_order_and_concurrency():
    texts = ["Bats are blind.", "Water boils at 100 degrees Celsius at sea level.", "The sky is a solid dome."]
    with BotHarness() as h:
        for text in texts:
            h.stub.enqueue(1, text)
            h.stub.enqueue(2, text)
        assert h.bot.poll_once() == 6
    for chat in (1, 2):
        replies = [t for c, t in h.stub.sent if c == chat]
        assert replies == [format_reply(verdict_for(t)) for t in texts]


def test_bot_run_stops_cleanly():
    with BotHarness() as h:
        h.stub.enqueue(5, "Bats are blind.")
        thread = threading.Thread(target=h.bot.run)
        thread.start()
        for _ in range(200):
            if h.stub.sent:
                break
            threading.Event().wait(0.01)
        h.bot.stop()
        thread.join(timeout=5)
    assert not thread.is_alive()
    assert len(h.stub.sent) == 1


def test_serve_without_token_exit_1(capsys, monkeypatch):
    monkeypatch.delenv("VERITY_BOT_TOKEN", raising=False)
    code, _, err = run(capsys, "serve", "--backend", "mock", "--fixtures", MOCK)
    assert code == 1 and "VERITY_BOT_TOKEN" in err


def test_bot_token_not_logged(caplog):
    # nothing listens on port 1, so the failure message would carry the URL
    client = TelegramClient("http://127.0.0.1:1", "123:SECRETTOKEN", timeout=1)
    bot = FactCheckBot(client, verdict_for, poll_timeout=0, sleep=lambda s: None)
    assert bot.poll_once() == 0
    assert "getUpdates failed" in caplog.text
    assert "SECRETTOKEN" not in caplog.text
