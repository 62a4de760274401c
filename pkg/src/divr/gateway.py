"""Client for OpenAI-compatible endpoints with decode control and disk caching.

Four decode modes control the think segment of the assistant turn:

- ``zero_think``     prefix ``<think></think>`` so the model answers directly.
- ``less_think``     prefix a fixed one-sentence think segment, already closed.
- ``regular_think``  prefix ``<think>`` and let the model close it naturally.
- ``more_think``     budget forcing: whenever the model closes its think
  segment before the wait budget is spent, the delimiter is replaced with a
  continuation string ("Wait, ..." optionally naming the next role) and the
  request is re-issued with the extended context.

Responses are cached on disk keyed by a content hash of the request, making
sampled completions replayable. A scripted mock transport keeps everything
testable offline.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Protocol, Sequence

import httpx

from .errors import (
    BudgetExceededError,
    InvalidParameterError,
    ProtocolError,
    TransportError,
)
from .prompts import BARE_CONTINUATION, ROLE_CONTINUATION_TEMPLATE

ENV_API_KEY = "DIVR_API_KEY"
ENV_BASE_URL = "DIVR_BASE_URL"
ENV_CACHE_DIR = "DIVR_CACHE_DIR"

THINK_OPEN = "<think>"
END_THINK = "</think>"

ZERO_THINK = "zero_think"
LESS_THINK = "less_think"
REGULAR_THINK = "regular_think"
MORE_THINK = "more_think"
DECODE_MODES = (ZERO_THINK, LESS_THINK, REGULAR_THINK, MORE_THINK)

LESS_THINK_SENTENCE = "Okay, the user ask for this, I can answer it without thinking much."

#: Fixed assistant prefixes for the single-request modes.
MODE_PREFIXES = {
    ZERO_THINK: f"{THINK_OPEN}{END_THINK}",
    LESS_THINK: f"{THINK_OPEN}{LESS_THINK_SENTENCE}{END_THINK}",
    REGULAR_THINK: THINK_OPEN,
    MORE_THINK: THINK_OPEN,
}

DEFAULT_WAIT_COUNT = 3


@dataclass(frozen=True)
class EndpointConfig:
    """Connection settings for one OpenAI-compatible endpoint."""

    model_id: str
    base_url: str = "http://localhost:8000/v1"
    api_key: str = ""
    timeout: float = 60.0
    max_retries: int = 3
    concurrency_limit: int = 4

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise InvalidParameterError(f"timeout must be positive, got {self.timeout}")
        if self.max_retries < 0:
            raise InvalidParameterError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.concurrency_limit < 1:
            raise InvalidParameterError(
                f"concurrency_limit must be >= 1, got {self.concurrency_limit}"
            )

    @classmethod
    def from_env(cls, model_id: str, **overrides) -> "EndpointConfig":
        values: dict[str, Any] = {
            "base_url": os.environ.get(ENV_BASE_URL, cls.base_url),
            "api_key": os.environ.get(ENV_API_KEY, ""),
        }
        values.update(overrides)
        return cls(model_id=model_id, **values)


@dataclass(frozen=True)
class DecodeStrategy:
    """Decode mode plus sampling and budget-forcing parameters."""

    mode: str = REGULAR_THINK
    wait_count: int = 0
    continuation_template: str = ROLE_CONTINUATION_TEMPLATE
    temperature: float = 0.7
    top_p: float = 0.95
    max_new_tokens: int = 4096

    def __post_init__(self) -> None:
        if self.mode not in DECODE_MODES:
            raise InvalidParameterError(f"unknown decode mode {self.mode!r}")
        if self.wait_count < 0:
            raise InvalidParameterError(f"wait_count must be >= 0, got {self.wait_count}")
        if self.mode != MORE_THINK and self.wait_count != 0:
            raise InvalidParameterError(f"wait_count must be 0 in mode {self.mode}")
        if self.temperature < 0:
            raise InvalidParameterError(f"temperature must be >= 0, got {self.temperature}")

    @classmethod
    def more_think(cls, wait_count: int = DEFAULT_WAIT_COUNT, **kwargs) -> "DecodeStrategy":
        return cls(mode=MORE_THINK, wait_count=wait_count, **kwargs)


@dataclass(frozen=True)
class CompletionResult:
    """One decoded completion split into think and answer segments."""

    think_text: str
    answer_text: str
    injected_continuations: int = 0
    raw_segments: tuple[str, ...] = ()
    cache_hit: bool = False

    @property
    def text(self) -> str:
        """Full assistant text with a single end-of-thinking delimiter."""
        return f"{THINK_OPEN}{self.think_text}{END_THINK}{self.answer_text}"


class Transport(Protocol):
    def post_json(self, path: str, payload: dict) -> dict: ...


class HttpTransport:
    """Bearer-authenticated JSON POSTs against the configured base URL."""

    def __init__(self, config: EndpointConfig):
        headers = {"Content-Type": "application/json"}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers=headers,
            timeout=config.timeout,
        )

    def post_json(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(f"request failed: {exc}") from exc
        if response.status_code >= 500:
            raise TransportError(f"server error {response.status_code}")
        if response.status_code >= 400:
            raise ProtocolError(f"endpoint rejected request: {response.status_code} {response.text[:200]}")
        try:
            return response.json()
        except ValueError as exc:
            raise ProtocolError(f"response body is not JSON: {exc}") from exc

    def close(self) -> None:
        self._client.close()


class MockTransport:
    """Scripted transport for offline tests.

    ``completions`` entries are served FIFO to chat requests: a str becomes a
    normal response body, a dict is returned as the raw body (for malformed
    response tests), and an Exception instance is raised. Embeddings default
    to unit basis vectors assigned per distinct text in first-seen order,
    unless an explicit vector is scripted. Tracks the maximum number of
    requests in flight so concurrency-limit tests can observe it.
    """

    def __init__(
        self,
        completions: Sequence[Any] = (),
        embeddings: Mapping[str, Sequence[float]] | None = None,
        embedding_dim: int = 8,
        fail_first: int = 0,
        latency: float = 0.0,
    ):
        self.completions = list(completions)
        self.embeddings = dict(embeddings or {})
        self.embedding_dim = embedding_dim
        self.fail_first = fail_first
        self.latency = latency
        self.requests: list[tuple[str, dict]] = []
        self.calls = 0
        self.max_in_flight = 0
        self._in_flight = 0
        self._basis: dict[str, int] = {}
        self._lock = threading.Lock()

    def _vector(self, text: str) -> list[float]:
        if text in self.embeddings:
            return list(self.embeddings[text])
        if text not in self._basis:
            if len(self._basis) >= self.embedding_dim:
                raise AssertionError("mock embedding space exhausted; raise embedding_dim")
            self._basis[text] = len(self._basis)
        vec = [0.0] * self.embedding_dim
        vec[self._basis[text]] = 1.0
        return vec

    def post_json(self, path: str, payload: dict) -> dict:
        with self._lock:
            self.calls += 1
            self.requests.append((path, json.loads(json.dumps(payload))))
            self._in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self._in_flight)
            should_fail = self.fail_first > 0
            if should_fail:
                self.fail_first -= 1
            entry: Any = None
            if not should_fail and path.endswith("/chat/completions"):
                if not self.completions:
                    raise AssertionError("mock completion script exhausted")
                entry = self.completions.pop(0)
        try:
            if self.latency:
                time.sleep(self.latency)
            if should_fail:
                raise TransportError("scripted transport failure")
            if path.endswith("/chat/completions"):
                if isinstance(entry, Exception):
                    raise entry
                if isinstance(entry, dict):
                    return entry
                return {"choices": [{"message": {"content": entry}}]}
            if path.endswith("/embeddings"):
                with self._lock:
                    vectors = [self._vector(t) for t in payload["input"]]
                return {"data": [{"embedding": v} for v in vectors]}
            raise AssertionError(f"unexpected path {path}")
        finally:
            with self._lock:
                self._in_flight -= 1


class DiskCache:
    """One JSON file per request fingerprint; writes are atomic and serialized."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    @staticmethod
    def key_for(fingerprint: Mapping) -> str:
        canonical = json.dumps(fingerprint, sort_keys=True, ensure_ascii=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, key: str, record: Mapping) -> None:
        path = self._path(key)
        with self._write_lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(record, ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, path)


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "divr"


@dataclass
class _ChatOutcome:
    text: str
    cache_hit: bool


class LlmGateway:
    """Cached, retrying, concurrency-limited access to one endpoint."""

    def __init__(
        self,
        config: EndpointConfig,
        transport: Transport | None = None,
        cache_dir: str | Path | None = None,
        retry_backoff: float = 0.5,
        sleep=time.sleep,
    ):
        self.config = config
        self.transport = transport if transport is not None else HttpTransport(config)
        self.cache = DiskCache(cache_dir if cache_dir is not None else default_cache_dir())
        self.retry_backoff = retry_backoff
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.concurrency_limit)

    # ------------------------------------------------------------------
    # transport plumbing

    def _post_with_retries(self, path: str, payload: dict) -> dict:
        last: TransportError | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                with self._slots:
                    return self.transport.post_json(path, payload)
            except TransportError as exc:
                last = exc
                if attempt < self.config.max_retries and self.retry_backoff > 0:
                    self._sleep(self.retry_backoff * (2**attempt))
        assert last is not None
        raise last

    def _chat_request(
        self, prompt: str, assistant_prefix: str, params: DecodeStrategy, salt: str
    ) -> _ChatOutcome:
        fingerprint = {
            "kind": "chat",
            "model": self.config.model_id,
            "prompt": prompt,
            "prefix": assistant_prefix,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_new_tokens,
            "salt": salt,
        }
        key = DiskCache.key_for(fingerprint)
        cached = self.cache.get(key)
        if cached is not None:
            return _ChatOutcome(text=cached["response"], cache_hit=True)
        payload = {
            "model": self.config.model_id,
            "messages": [
                {"role": "user", "content": prompt},
                {"role": "assistant", "content": assistant_prefix},
            ],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_new_tokens,
        }
        body = self._post_with_retries("/chat/completions", payload)
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"unexpected chat response shape: {body!r}") from exc
        if not isinstance(text, str):
            raise ProtocolError(f"chat content is not a string: {text!r}")
        self.cache.put(key, {"fingerprint": fingerprint, "response": text})
        return _ChatOutcome(text=text, cache_hit=False)

    # ------------------------------------------------------------------
    # decode control

    def _continuation(self, params: DecodeStrategy, role_sequence: Sequence[str], index: int) -> str:
        if not role_sequence:
            return BARE_CONTINUATION
        return params.continuation_template.format(role=role_sequence[index])

    def _decode_loop(
        self,
        prompt: str,
        params: DecodeStrategy,
        role_sequence: Sequence[str],
        wait_count: int,
        cache_salt: str,
        require_delimiter: bool,
    ) -> CompletionResult:
        assistant = THINK_OPEN
        segments: list[str] = []
        injected = 0
        all_hits = True
        while True:
            outcome = self._chat_request(prompt, assistant, params, f"{cache_salt}#{len(segments)}")
            segments.append(outcome.text)
            all_hits = all_hits and outcome.cache_hit
            cut = outcome.text.find(END_THINK)
            if cut == -1:
                if require_delimiter:
                    raise BudgetExceededError(
                        f"no end-of-thinking delimiter within {params.max_new_tokens} tokens "
                        f"(segment {len(segments)})"
                    )
                # Regular decode that ran out of budget: everything is think text.
                return CompletionResult(
                    think_text=(assistant + outcome.text)[len(THINK_OPEN) :],
                    answer_text="",
                    injected_continuations=injected,
                    raw_segments=tuple(segments),
                    cache_hit=all_hits,
                )
            if injected < wait_count:
                assistant = assistant + outcome.text[:cut] + " " + self._continuation(
                    params, role_sequence, injected
                )
                injected += 1
                continue
            think_full = assistant + outcome.text[:cut]
            return CompletionResult(
                think_text=think_full[len(THINK_OPEN) :],
                answer_text=outcome.text[cut + len(END_THINK) :],
                injected_continuations=injected,
                raw_segments=tuple(segments),
                cache_hit=all_hits,
            )

    def complete(
        self,
        prompt: str,
        params: DecodeStrategy | None = None,
        role_sequence: Sequence[str] = (),
        cache_salt: str = "",
    ) -> CompletionResult:
        """Run one completion under the strategy's decode mode."""
        if not prompt:
            raise InvalidParameterError("prompt must be non-empty")
        params = params or DecodeStrategy()
        if params.mode == MORE_THINK:
            return self.budget_forced_complete(prompt, role_sequence, params, cache_salt)
        if params.mode == REGULAR_THINK:
            return self._decode_loop(
                prompt, params, (), wait_count=0, cache_salt=cache_salt, require_delimiter=False
            )
        prefix = MODE_PREFIXES[params.mode]
        outcome = self._chat_request(prompt, prefix, params, f"{cache_salt}#0")
        full = prefix + outcome.text
        cut = full.rfind(END_THINK)
        return CompletionResult(
            think_text=full[len(THINK_OPEN) : cut],
            answer_text=full[cut + len(END_THINK) :],
            injected_continuations=0,
            raw_segments=(outcome.text,),
            cache_hit=outcome.cache_hit,
        )

    def budget_forced_complete(
        self,
        prompt: str,
        role_sequence: Sequence[str],
        params: DecodeStrategy,
        cache_salt: str = "",
    ) -> CompletionResult:
        """Suppress the first ``wait_count`` delimiters, appending continuations.

        Each suppressed delimiter is replaced by the continuation template
        instantiated with the next role (or the bare continuation when no
        roles are given). The final output contains exactly ``wait_count``
        injected continuations and exactly one terminal delimiter.
        """
        if params.mode != MORE_THINK:
            raise InvalidParameterError(f"budget forcing requires more_think, got {params.mode}")
        if role_sequence and len(role_sequence) < params.wait_count:
            raise InvalidParameterError(
                f"{params.wait_count} continuations need at least as many roles, "
                f"got {len(role_sequence)}"
            )
        return self._decode_loop(
            prompt,
            params,
            role_sequence,
            wait_count=params.wait_count,
            cache_salt=cache_salt,
            require_delimiter=True,
        )

    # ------------------------------------------------------------------
    # embeddings

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        """One embedding vector per text; cached per (model, text)."""
        if not texts:
            raise InvalidParameterError("embed requires at least one text")
        keys = [
            DiskCache.key_for({"kind": "embedding", "model": self.config.model_id, "text": t})
            for t in texts
        ]
        vectors: list[list[float] | None] = []
        for key in keys:
            cached = self.cache.get(key)
            vectors.append(None if cached is None else cached["vector"])
        missing = [i for i, v in enumerate(vectors) if v is None]
        if missing:
            payload = {
                "model": self.config.model_id,
                "input": [texts[i] for i in missing],
            }
            body = self._post_with_retries("/embeddings", payload)
            try:
                fetched = [row["embedding"] for row in body["data"]]
            except (KeyError, TypeError) as exc:
                raise ProtocolError(f"unexpected embedding response shape: {body!r}") from exc
            if len(fetched) != len(missing):
                raise ProtocolError(
                    f"embedding count mismatch: sent {len(missing)}, got {len(fetched)}"
                )
            for i, vec in zip(missing, fetched):
                if not isinstance(vec, list) or not all(
                    isinstance(x, (int, float)) for x in vec
                ):
                    raise ProtocolError(f"embedding row is not a number list: {vec!r}")
                vec = [float(x) for x in vec]
                self.cache.put(
                    keys[i],
                    {
                        "fingerprint": {
                            "kind": "embedding",
                            "model": self.config.model_id,
                            "text": texts[i],
                        },
                        "vector": vec,
                    },
                )
                vectors[i] = vec
        assert all(v is not None for v in vectors)
        return [list(v) for v in vectors if v is not None]


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine similarity; 0.0 when either vector is all-zero."""
    dot = sum(a * b for a, b in zip(u, v))
    nu = sum(a * a for a in u) ** 0.5
    nv = sum(b * b for b in v) ** 0.5
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)
