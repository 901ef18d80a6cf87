"""Telegram long-polling fact-check bot.

Uses two Bot API methods: ``getUpdates`` with an offset cursor and
``sendMessage`` with plain text. Updates are acknowledged by polling with
``offset = last update_id + 1`` only after the whole batch has been
answered, so a crash never skips a message and a redelivered update is
recognized by its id and ignored.
"""

from __future__ import annotations

import logging
import signal
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import httpx

from ..claims import Outcome, Verdict

log = logging.getLogger(__name__)

USAGE = (
    "Send me a statement and I will rate how truthful it is.\n"
    "You get a veracity score from 0% (false) to 100% (true), the part of the statement "
    "that looks wrong, and a short reason.\n"
    "Commands: /help shows this message."
)
APOLOGY = "Sorry, I could not assess that statement right now. Please try again later."


class TelegramError(Exception):
    pass


class TelegramTransient(TelegramError):
    pass


@dataclass(frozen=True)
class BotUpdate:
    update_id: int
    chat_id: Optional[int]
    message_text: Optional[str]

    @classmethod
    def from_api(cls, data: dict) -> "BotUpdate":
        message = data.get("message") or data.get("edited_message") or {}
        chat = message.get("chat") or {}
        return cls(int(data["update_id"]), chat.get("id"), message.get("text"))


class TelegramClient:
    def __init__(self, base_url: str, token: str, client: Optional[httpx.Client] = None, timeout: float = 10.0):
        if not token:
            raise TelegramError("bot token is empty")
        self._base = f"{base_url.rstrip('/')}/bot{token}"
        self._token = token
        self._client = client or httpx.Client(timeout=timeout)

    def _redact(self, text: str) -> str:
        return text.replace(self._token, "***")

    def call(self, method: str, payload: dict, timeout: Optional[float] = None):
        try:
            response = self._client.post(f"{self._base}/{method}", json=payload, timeout=timeout)
        except httpx.HTTPError as err:
            raise TelegramTransient(self._redact(f"{method}: {type(err).__name__}: {err}")) from None
        if response.status_code == 429 or response.status_code >= 500:
            raise TelegramTransient(f"{method}: HTTP {response.status_code}")
        try:
            body = response.json()
        except ValueError:
            raise TelegramError(f"{method}: non-JSON reply (HTTP {response.status_code})") from None
        if not body.get("ok"):
            raise TelegramError(f"{method}: {body.get('description', 'request failed')}")
        return body.get("result")

    def get_updates(self, offset: Optional[int], timeout: int = 30) -> list[BotUpdate]:
        payload = {"timeout": timeout, "allowed_updates": ["message"]}
        if offset is not None:
            payload["offset"] = offset
        result = self.call("getUpdates", payload, timeout=timeout + 10)
        return [BotUpdate.from_api(item) for item in result or ()]

    def send_message(self, chat_id: int, text: str) -> None:
        self.call("sendMessage", {"chat_id": chat_id, "text": text})


def format_reply(verdict: Verdict) -> str:
    if verdict.outcome is Outcome.NON_VERIFIABLE:
        return "This statement is not objective or verifiable, so I did not score it."
    if verdict.outcome is Outcome.UNABLE_TO_JUDGE:
        text = "I am unable to judge this statement."
        return f"{text}\nReason: {verdict.reason}" if verdict.reason else text
    lines = [f"Veracity score: {verdict.score}% ({verdict.label.value})"]
    parts = ", ".join(p.text for p in verdict.false_parts)
    lines.append(f"False part: {parts or '-'}")
    if verdict.reason:
        lines.append(f"Reason: {verdict.reason}")
    return "\n".join(lines)


class FactCheckBot:
    """Polls for messages and answers each with a verdict.

    ``check`` turns a statement into a Verdict; any exception it raises is
    answered with an apology instead of stopping the loop.
    """

    def __init__(
        self,
        client: TelegramClient,
        check: Callable[[str], Verdict],
        *,
        max_workers: int = 4,
        poll_timeout: int = 30,
        poll_interval: float = 0.0,
        send_attempts: int = 5,
        base_backoff: float = 1.0,
        max_backoff: float = 30.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.client = client
        self.check = check
        self.max_workers = max_workers
        self.poll_timeout = poll_timeout
        self.poll_interval = poll_interval
        self.send_attempts = send_attempts
        self.base_backoff = base_backoff
        self.max_backoff = max_backoff
        self._sleep = sleep
        self.offset: Optional[int] = None
        self.stop_event = threading.Event()
        self._failures = 0

    def reply_for(self, text: Optional[str]) -> Optional[str]:
        if text is None or not text.strip():
            return None
        command = text.strip().split()[0].split("@")[0].lower()
        if command in ("/start", "/help"):
            return USAGE
        if command.startswith("/"):
            return f"Unknown command {command}.\n{USAGE}"
        try:
            return format_reply(self.check(text.strip()))
        except Exception:
            log.exception("check failed")
            return APOLOGY

    def _send(self, chat_id: int, text: str) -> bool:
        for attempt in range(self.send_attempts):
            if attempt:
                self._sleep(min(self.max_backoff, self.base_backoff * 2 ** (attempt - 1)))
            try:
                self.client.send_message(chat_id, text)
                return True
            except TelegramTransient as err:
                log.warning("sendMessage attempt %d failed: %s", attempt + 1, err)
            except TelegramError as err:
                log.error("sendMessage rejected: %s", err)
                return False
        log.error("giving up on reply to chat %s", chat_id)
        return False

    def _handle_chat(self, updates: list[BotUpdate]) -> None:
        for update in updates:
            reply = self.reply_for(update.message_text)
            if reply is not None and update.chat_id is not None:
                self._send(update.chat_id, reply)

    def poll_once(self) -> int:
        """Fetch one batch and answer it. Returns the number of new updates handled."""
        try:
            updates = self.client.get_updates(self.offset, self.poll_timeout)
        except TelegramError as err:
            self._failures += 1
            delay = min(self.max_backoff, self.base_backoff * 2 ** (self._failures - 1))
            log.warning("getUpdates failed (%s); retrying in %.1fs", err, delay)
            self._sleep(delay)
            return 0
        self._failures = 0

        fresh, seen = [], set()
        for update in sorted(updates, key=lambda u: u.update_id):
            if (self.offset is not None and update.update_id < self.offset) or update.update_id in seen:
                continue
            seen.add(update.update_id)
            fresh.append(update)
        if not fresh:
            return 0

        by_chat: dict = {}
        for update in fresh:
            by_chat.setdefault(update.chat_id, []).append(update)
        if len(by_chat) == 1 or self.max_workers <= 1:
            for batch in by_chat.values():
                self._handle_chat(batch)
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                list(pool.map(self._handle_chat, by_chat.values()))
        self.offset = fresh[-1].update_id + 1
        return len(fresh)

    def run(self) -> None:
        """Poll until ``stop_event`` is set; the batch in progress is always finished."""
        while not self.stop_event.is_set():
            handled = self.poll_once()
            if not handled and self.poll_interval:
                self.stop_event.wait(self.poll_interval)

    def stop(self) -> None:
        self.stop_event.set()


def install_signal_handlers(bot: FactCheckBot) -> None:
    def handler(signum, frame):
        log.info("signal %s received; finishing in-flight replies", signum)
        bot.stop()

    for sig in (signal.SIGTERM, signal.SIGINT):
        signal.signal(sig, handler)
