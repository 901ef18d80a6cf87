"""Model and search backends.

Every backend exposes ``complete(request) -> str`` and/or
``search(query, k) -> list[SearchResult]``. The HTTP backends speak a
chat-completion JSON protocol (``messages`` in, ``choices[0].message.content``
out) and share one retry policy: 429, 5xx, timeouts and connection errors
are retried with exponential backoff; 401/403 fail immediately.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Optional, Protocol, Sequence, Union

import httpx

from .claims import DomainError
from .prompting import is_plan_prompt, question_of

log = logging.getLogger(__name__)

MODEL_KEY_ENV = "VERITY_MODEL_KEY"
MODEL_ENDPOINT_ENV = "VERITY_MODEL_ENDPOINT"
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_SEARCH_K = 5
ROLES = ("system", "user", "assistant")


class ProviderError(Exception):
    pass


class AuthError(ProviderError):
    pass


class TransientExhausted(ProviderError):
    pass


class MalformedResponse(ProviderError):
    pass


class ReplayMiss(ProviderError):
    pass


class FixtureMissing(ProviderError):
    pass


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise DomainError(f"unknown message role {self.role!r}")


@dataclass(frozen=True)
class ModelRequest:
    model_id: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self) -> None:
        if not self.messages:
            raise DomainError("a model request needs at least one message")
        if self.temperature < 0:
            raise DomainError("temperature must be >= 0")

    @classmethod
    def for_prompt(cls, model_id: str, prompt: str, temperature: float = 0.0, max_tokens: int = 512) -> "ModelRequest":
        return cls(model_id, (Message("user", prompt),), temperature, max_tokens)

    @property
    def prompt(self) -> str:
        """Content of the last user message."""
        for message in reversed(self.messages):
            if message.role == "user":
                return message.content
        return self.messages[-1].content

    def payload(self) -> dict:
        return {
            "model": self.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def cache_key(self) -> str:
        material = [self.model_id, [[m.role, m.content] for m in self.messages], self.temperature]
        blob = json.dumps(material, ensure_ascii=False, separators=(",", ":"), sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SearchResult:
    title: str
    url: str
    snippet: str

    def __post_init__(self) -> None:
        if not self.url:
            raise DomainError("search result url must be non-empty")

    def to_dict(self) -> dict:
        return {"title": self.title, "url": self.url, "snippet": self.snippet}

    @classmethod
    def from_dict(cls, data: Mapping) -> "SearchResult":
        return cls(data.get("title", ""), data["url"], data.get("snippet", ""))


@dataclass
class ProviderConfig:
    """Where and how to reach a backend. Holds env-var names, never secrets."""

    endpoint: str = DEFAULT_ENDPOINT
    auth_env_var: str = MODEL_KEY_ENV
    timeout: float = 60.0
    max_attempts: int = 4
    base_backoff: float = 1.0
    max_backoff: float = 30.0
    rate_limit: float = 60.0
    max_in_flight: int = 4
    search_endpoint: str = ""
    search_auth_env_var: str = ""

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.max_attempts < 1:
            raise DomainError("max_attempts must be >= 1")
        if self.rate_limit <= 0:
            raise DomainError("rate_limit must be positive")
        if self.max_in_flight < 1:
            raise DomainError("max_in_flight must be >= 1")
        if self.timeout <= 0 or self.base_backoff < 0:
            raise DomainError("timeout must be positive and base_backoff non-negative")

    @classmethod
    def from_dict(cls, data: Mapping) -> "ProviderConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown provider settings: {sorted(unknown)}")
        if any("key" == k.lower() or "token" == k.lower() for k in data):
            raise DomainError("secrets belong in environment variables, not config files")
        return cls(**data)


class ModelBackend(Protocol):
    def complete(self, request: ModelRequest) -> str: ...


class SearchBackend(Protocol):
    def search(self, query: str, k: int = DEFAULT_SEARCH_K) -> list[SearchResult]: ...


class RateLimiter:
    """Sliding-window limiter: at most ``rate`` acquisitions in any ``per`` seconds.

    Waiting happens under the lock, so concurrent callers are admitted one
    at a time in arrival order.
    """

    def __init__(
        self,
        rate: float,
        per: float = 60.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0 or per <= 0:
            raise DomainError("rate and window must be positive")
        self.capacity = max(1, int(rate))
        self.per = per
        self._clock = clock
        self._sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            while True:
                now = self._clock()
                while self._stamps and self._stamps[0] <= now - self.per:
                    self._stamps.popleft()
                if len(self._stamps) < self.capacity:
                    self._stamps.append(now)
                    return
                self._sleep(self._stamps[0] + self.per - now)


def _retry_after(response: httpx.Response) -> Optional[float]:
    value = response.headers.get("retry-after")
    try:
        return float(value) if value is not None else None
    except ValueError:
        return None


class HttpTransport:
    """Retrying, rate-limited HTTP sender shared by the live backends."""

    def __init__(
        self,
        config: ProviderConfig,
        client: Optional[httpx.Client] = None,
        limiter: Optional[RateLimiter] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.client = client or httpx.Client(timeout=config.timeout)
        self.limiter = limiter or RateLimiter(config.rate_limit)
        self._sleep = sleep
        self._in_flight = threading.BoundedSemaphore(config.max_in_flight)
        self._count_lock = threading.Lock()
        self.attempts = 0

    def _headers(self, env_var: str) -> dict:
        headers = {"Accept": "application/json"}
        secret = os.environ.get(env_var) if env_var else None
        if secret:
            headers["Authorization"] = f"Bearer {secret}"
        return headers

    def send(self, method: str, url: str, env_var: str, **kwargs) -> httpx.Response:
        cfg = self.config
        last_problem = "no attempt made"
        hint = None
        for attempt in range(cfg.max_attempts):
            if attempt:
                delay = cfg.base_backoff * 2 ** (attempt - 1)
                self._sleep(min(cfg.max_backoff, max(delay, hint or 0.0)))
            hint = None
            self.limiter.acquire()
            with self._count_lock:
                self.attempts += 1
            try:
                with self._in_flight:
                    response = self.client.request(method, url, headers=self._headers(env_var), **kwargs)
            except (httpx.TimeoutException, httpx.TransportError) as err:
                last_problem = f"{type(err).__name__}: {err}"
                log.warning("attempt %d/%d to %s failed: %s", attempt + 1, cfg.max_attempts, url, last_problem)
                continue
            status = response.status_code
            if status in (401, 403):
                raise AuthError(f"{url} rejected credentials (HTTP {status})")
            if status == 429 or status >= 500:
                last_problem = f"HTTP {status}"
                log.warning("attempt %d/%d to %s got %s", attempt + 1, cfg.max_attempts, url, last_problem)
                hint = _retry_after(response)
                continue
            if status >= 400:
                raise ProviderError(f"{url} returned HTTP {status}")
            return response
        raise TransientExhausted(f"{url}: gave up after {cfg.max_attempts} attempts ({last_problem})")


class HttpChatBackend:
    def __init__(self, config: ProviderConfig, transport: Optional[HttpTransport] = None):
        self.config = config
        self.transport = transport or HttpTransport(config)

    def complete(self, request: ModelRequest) -> str:
        response = self.transport.send(
            "POST", self.config.endpoint, self.config.auth_env_var, json=request.payload()
        )
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as err:
            raise MalformedResponse(f"unexpected chat completion payload: {err!r}") from None
        if not isinstance(content, str):
            raise MalformedResponse("message content is not text")
        return content


class HttpSearchBackend:
    """GET ``search_endpoint?q=..&count=k`` returning ``{"results": [{title, url, snippet}]}``."""

    def __init__(self, config: ProviderConfig, transport: Optional[HttpTransport] = None):
        if not config.search_endpoint:
            raise DomainError("search_endpoint is not configured")
        self.config = config
        self.transport = transport or HttpTransport(config)

    def search(self, query: str, k: int = DEFAULT_SEARCH_K) -> list[SearchResult]:
        if not query or not query.strip():
            raise DomainError("search query must be non-empty")
        response = self.transport.send(
            "GET", self.config.search_endpoint, self.config.search_auth_env_var,
            params={"q": query, "count": k},
        )
        try:
            items = response.json()["results"]
            results = [SearchResult.from_dict(item) for item in items]
        except (ValueError, KeyError, TypeError, DomainError) as err:
            raise MalformedResponse(f"unexpected search payload: {err!r}") from None
        return results[:k]


class MockBackend:
    """Canned answers keyed by the question a prompt asks.

    ``answers`` serves judging and synthesis prompts, ``plans`` serves agent
    plan prompts; both are keyed by the statement text. ``default`` is used
    for anything unmatched, otherwise FixtureMissing is raised.
    """

    def __init__(
        self,
        answers: Optional[Mapping[str, str]] = None,
        plans: Optional[Mapping[str, str]] = None,
        default: Optional[str] = None,
    ):
        self.answers = dict(answers or {})
        self.plans = dict(plans or {})
        self.default = default
        self.calls = 0
        self.requests: list[ModelRequest] = []
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> str:
        with self._lock:
            self.calls += 1
            self.requests.append(request)
        prompt = request.prompt
        key = question_of(prompt)
        table = self.plans if is_plan_prompt(prompt) else self.answers
        if key is not None and key in table:
            return table[key]
        if self.default is not None:
            return self.default
        raise FixtureMissing(f"no fixture answer for {key!r}")


class FixtureSearch:
    def __init__(self, results: Optional[Mapping[str, Sequence[SearchResult]]] = None):
        self.results = {q: list(r) for q, r in (results or {}).items()}
        self.calls = 0
        self._lock = threading.Lock()

    def search(self, query: str, k: int = DEFAULT_SEARCH_K) -> list[SearchResult]:
        if not query or not query.strip():
            raise DomainError("search query must be non-empty")
        with self._lock:
            self.calls += 1
        return list(self.results.get(query, ()))[:k]


def load_fixtures(path: Union[str, Path]) -> tuple[MockBackend, FixtureSearch]:
    """Build mock backends from a JSON file with ``answers``, ``plans``, ``default``, ``search``."""
    data = json.loads(Path(path).read_text("utf-8"))
    search = {
        query: [SearchResult.from_dict(item) for item in items]
        for query, items in data.get("search", {}).items()
    }
    model = MockBackend(data.get("answers"), data.get("plans"), data.get("default"))
    return model, FixtureSearch(search)


class _Offline:
    def complete(self, request: ModelRequest) -> str:
        raise ReplayMiss("no inner model backend")

    def search(self, query: str, k: int = DEFAULT_SEARCH_K) -> list[SearchResult]:
        raise ReplayMiss("no inner search backend")


MODES = ("record", "replay", "passthrough")


class RecordReplayBackend:
    """Cache wrapper over a model and/or search backend.

    The cache is a JSON-lines file of ``{key, response, timestamp}``; later
    lines win. In ``replay`` mode the inner backend is never called and a
    missing key raises ReplayMiss.
    """

    def __init__(self, inner=None, cache_path: Union[str, Path] = "", mode: str = "replay"):
        if mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        self.inner = inner if inner is not None else _Offline()
        self.path = Path(cache_path)
        self.mode = mode
        self._lock = threading.Lock()
        self._cache: dict[str, object] = {}
        if mode != "passthrough" and self.path.exists():
            self._load()

    def _load(self) -> None:
        for number, line in enumerate(self.path.read_text("utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                self._cache[entry["key"]] = entry["response"]
            except (ValueError, KeyError, TypeError):
                log.warning("%s:%d: unreadable cache line skipped", self.path, number)

    def _append(self, key: str, response) -> None:
        entry = {
            "key": key,
            "response": response,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        line = json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n"
        with self._lock:
            self._cache[key] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)

    def _lookup(self, key: str, what: str):
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        raise ReplayMiss(f"no recorded response for {what} (key {key[:12]})")

    def complete(self, request: ModelRequest) -> str:
        if self.mode == "passthrough":
            return self.inner.complete(request)
        key = request.cache_key()
        if self.mode == "replay":
            return self._lookup(key, "model request")
        response = self.inner.complete(request)
        self._append(key, response)
        return response

    def search(self, query: str, k: int = DEFAULT_SEARCH_K) -> list[SearchResult]:
        if not query or not query.strip():
            raise DomainError("search query must be non-empty")
        if self.mode == "passthrough":
            return self.inner.search(query, k)
        key = hashlib.sha256(json.dumps(["search", query, k], ensure_ascii=False).encode("utf-8")).hexdigest()
        if self.mode == "replay":
            return [SearchResult.from_dict(item) for item in self._lookup(key, f"search {query!r}")]
        results = self.inner.search(query, k)
        self._append(key, [r.to_dict() for r in results])
        return results
