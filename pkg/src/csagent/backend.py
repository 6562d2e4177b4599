"""Chat-completion backends: a live HTTP client and a scripted replay backend."""
from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx

from .errors import (
    AuthMissing,
    BackendError,
    NoMatch,
    ProviderError,
    RateLimited,
    ScriptExhausted,
    Timeout,
)

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.5
SC_TEMPERATURE = 0.8
ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple  # of {"role": ..., "content": ...} dicts
    temperature: float = DEFAULT_TEMPERATURE
    model_id: str = ""
    max_tokens: int | None = None

    def __post_init__(self):
        msgs = tuple(dict(m) for m in self.messages)
        object.__setattr__(self, "messages", msgs)
        if not msgs or msgs[0]["role"] != "system":
            raise ValueError("first message must carry the system role")
        for i, m in enumerate(msgs[1:]):
            want = "user" if i % 2 == 0 else "assistant"
            if m["role"] != want:
                raise ValueError(f"message {i + 1} should be {want!r}, got {m['role']!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @property
    def last_user(self) -> str:
        return self.messages[-1]["content"] if len(self.messages) > 1 else ""

    def full_text(self) -> str:
        return "\n".join(m["content"] for m in self.messages)


@dataclass(frozen=True)
class ChatResponse:
    text: str
    finish_reason: str = "stop"
    prompt_tokens: int = 0
    completion_tokens: int = 0
    attempts: int = 1


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


def count_tokens(text: str) -> int:
    """Whitespace token estimate, used when a provider reports no usage."""
    return len(text.split())


# -- live ----------------------------------------------------------------------


@dataclass
class BackendConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-3.5-turbo"
    api_key_env: str = "CS_AGENT_API_KEY"
    timeout_s: float = 60.0
    max_attempts: int = 3
    backoff_base_s: float = 1.0
    temperature: float = DEFAULT_TEMPERATURE
    sc_temperature: float = SC_TEMPERATURE
    parallelism: int = 4
    requests_per_second: float | None = None

    def validate(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


class RateLimiter:
    """Spaces calls at least ``1 / rate`` seconds apart across threads."""

    def __init__(self, rate: float | None, clock=time.monotonic, sleep=time.sleep):
        self.interval = 1.0 / rate if rate else 0.0
        self._next = 0.0
        self._lock = threading.Lock()
        self._clock, self._sleep = clock, sleep

    def wait(self):
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            start = max(now, self._next)
            self._next = start + self.interval
        if start > now:
            self._sleep(start - now)


class LiveBackend:
    """OpenAI-style chat-completions client over HTTPS.

    Transport failures, timeouts, 429 and 5xx responses are retried with
    exponential backoff; any other 4xx is surfaced immediately.
    """

    def __init__(self, config: BackendConfig, *, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep, wire_log: str | Path | None = None):
        config.validate()
        self.config = config
        self._transport = transport
        self._sleep = sleep
        self._wire_log = Path(wire_log) if wire_log else None
        self._wire_lock = threading.Lock()
        self._slots = threading.BoundedSemaphore(config.parallelism)
        self._limiter = RateLimiter(config.requests_per_second, sleep=sleep)
        self.delays: list[float] = []

    def _key(self) -> str:
        key = os.environ.get(self.config.api_key_env)
        if not key:
            raise AuthMissing(f"environment variable {self.config.api_key_env} is not set")
        return key

    def _body(self, request: ChatRequest) -> dict:
        body = {
            "model": request.model_id or self.config.model,
            "messages": list(request.messages),
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            body["max_tokens"] = request.max_tokens
        return body

    def _log_wire(self, key: str, body: dict, status: int | None, payload: str):
        if self._wire_log is None:
            return
        line = json.dumps({"request": body, "status": status, "response": payload})
        line = line.replace(key, "***")
        with self._wire_lock, open(self._wire_log, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = self._key()
        body = self._body(request)
        cfg = self.config
        headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        last: BackendError | None = None
        with self._slots, httpx.Client(transport=self._transport, timeout=cfg.timeout_s) as client:
            for attempt in range(1, cfg.max_attempts + 1):
                if attempt > 1:
                    delay = cfg.backoff_base_s * 2 ** (attempt - 2)
                    self.delays.append(delay)
                    self._sleep(delay)
                self._limiter.wait()
                log.info("chat request attempt %d/%d", attempt, cfg.max_attempts)
                try:
                    resp = client.post(cfg.endpoint, json=body, headers=headers)
                except httpx.TimeoutException as exc:
                    last = Timeout(f"request timed out after {cfg.timeout_s}s: {exc}")
                    self._log_wire(key, body, None, "timeout")
                    continue
                except httpx.TransportError as exc:
                    last = ProviderError(0, f"transport error: {exc}")
                    self._log_wire(key, body, None, "transport error")
                    continue
                self._log_wire(key, body, resp.status_code, resp.text)
                if resp.status_code == 429:
                    last = RateLimited(f"rate limited: {resp.text[:200]}")
                    continue
                if resp.status_code >= 500:
                    last = ProviderError(resp.status_code, resp.text)
                    continue
                if resp.status_code >= 400:
                    raise ProviderError(resp.status_code, resp.text)
                return self._parse(resp, request, attempt)
        assert last is not None
        log.warning("giving up after %d attempts: %s", cfg.max_attempts, last)
        raise last

    @staticmethod
    def _parse(resp: httpx.Response, request: ChatRequest, attempt: int) -> ChatResponse:
        try:
            data = resp.json()
            choice = data["choices"][0]
            text = choice["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(resp.status_code, f"unexpected response shape: {exc}") from None
        usage = data.get("usage") or {}
        return ChatResponse(
            text=text,
            finish_reason=choice.get("finish_reason") or "stop",
            prompt_tokens=int(usage.get("prompt_tokens", count_tokens(request.full_text()))),
            completion_tokens=int(usage.get("completion_tokens", count_tokens(text))),
            attempts=attempt,
        )


# -- scripted --------------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    """Reply ``response`` when ``pattern`` (a regex) is found in the request.

    ``scope="last"`` searches the final user message, ``"all"`` every message.
    """

    pattern: str
    response: str
    scope: str = "last"

    def matches(self, request: ChatRequest) -> bool:
        haystack = request.last_user if self.scope == "last" else request.full_text()
        return re.search(self.pattern, haystack) is not None


class ScriptedBackend:
    """Deterministic stand-in for a model; every request is recorded.

    Rules are tried first, in order; otherwise the next scripted response is
    consumed.
    """

    def __init__(self, responses: Sequence[str] | None = None, rules: Sequence[Rule] | None = None):
        if not responses and not rules:
            raise ValueError("scripted backend needs responses or rules")
        self.responses = list(responses or [])
        self.rules = [r if isinstance(r, Rule) else Rule(*r) for r in (rules or [])]
        self.requests: list[ChatRequest] = []
        self._cursor = 0
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.requests.append(request)
            text = None
            for rule in self.rules:
                if rule.matches(request):
                    text = rule.response
                    break
            if text is None:
                if self._cursor < len(self.responses):
                    text = self.responses[self._cursor]
                    self._cursor += 1
                elif self.responses:
                    raise ScriptExhausted(f"script of {len(self.responses)} responses exhausted")
                else:
                    raise NoMatch("no rule matched the request")
        return ChatResponse(
            text=text,
            prompt_tokens=count_tokens(request.full_text()),
            completion_tokens=count_tokens(text),
        )

    def fork(self) -> "ScriptedBackend":
        """Fresh copy with the cursor rewound and no recorded requests."""
        return ScriptedBackend(self.responses, self.rules)


SCRIPT_SEPARATOR = "==="


def load_script(path) -> ScriptedBackend:
    """Load a script file.

    ``.json``: ``{"responses": [...], "rules": [{"pattern", "response", "scope"}]}``.
    Anything else: plain text, responses separated by lines reading ``===``.
    """
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        obj = json.loads(raw)
        rules = [Rule(r["pattern"], r["response"], r.get("scope", "last")) for r in obj.get("rules", [])]
        return ScriptedBackend(obj.get("responses", []), rules)
    chunks, current = [], []
    for line in raw.splitlines():
        if line.strip() == SCRIPT_SEPARATOR:
            chunks.append("\n".join(current).strip("\n"))
            current = []
        else:
            current.append(line)
    if any(s.strip() for s in current):
        chunks.append("\n".join(current).strip("\n"))
    return ScriptedBackend(chunks)

