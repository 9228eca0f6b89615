"""Chat-completion gateway: OpenAI-compatible HTTP backend, a table-driven
mock backend for offline runs, plus on-disk response caching and retry.

Cache entries are content-addressed by a hash over (model, messages,
temperature, response format, cache tag) and never expire, so judged runs
stay replayable. Writes go through write-temp-then-rename.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import requests

log = logging.getLogger(__name__)

API_KEY_ENV = "FAILSCOPE_API_KEY"
BASE_URL_ENV = "FAILSCOPE_BASE_URL"
_FALLBACK_KEY_ENV = "OPENAI_API_KEY"
_FALLBACK_URL_ENV = "OPENAI_BASE_URL"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


class GatewayError(RuntimeError):
    pass


class GatewayRetryError(GatewayError):
    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class GatewayFormatError(GatewayError):
    """Backend returned content that violates the requested response format."""


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    response_format: str = "text"  # "text" | "json"
    cache_tag: str = ""  # extra key material, e.g. a judge run index

    def __post_init__(self):
        if not self.messages:
            raise GatewayError("a chat request needs at least one message")
        if not math.isfinite(self.temperature):
            raise GatewayError("temperature must be finite")
        if self.temperature < 0:
            raise GatewayError("temperature must be >= 0")
        if self.response_format not in ("text", "json"):
            raise GatewayError(f"unknown response_format {self.response_format!r}")

    def request_hash(self) -> str:
        payload = {
            "model": self.model_id,
            "messages": [[role, content] for role, content in self.messages],
            "temperature": self.temperature,
            "response_format": self.response_format,
        }
        if self.cache_tag:
            payload["cache_tag"] = self.cache_tag
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    content: str
    cached: bool
    backend: str  # "http" | "mock"


def user_message(content: str) -> tuple[tuple[str, str], ...]:
    return (("user", content),)


class MockBackend:
    """Maps request hashes to canned content; unknown hashes are an error."""

    name = "mock"

    def __init__(self, table: dict[str, str] | None = None):
        self.table = dict(table or {})

    @classmethod
    def from_fixtures(cls, path: str | Path) -> "MockBackend":
        """Load a JSONL fixtures file of {"request_hash": ..., "content": ...}."""
        table: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                table[obj["request_hash"]] = obj["content"]
        return cls(table)

    def add(self, request: ChatRequest, content: str) -> None:
        self.table[request.request_hash()] = content

    def complete(self, request: ChatRequest) -> str:
        key = request.request_hash()
        if key not in self.table:
            raise GatewayError(
                f"mock backend has no scripted response for request hash {key} "
                f"(first message starts: {request.messages[0][1][:80]!r})"
            )
        return self.table[key]


class HttpBackend:
    """OpenAI-style chat-completions over HTTPS."""

    name = "http"

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.base_url = (
            base_url
            or os.environ.get(BASE_URL_ENV)
            or os.environ.get(_FALLBACK_URL_ENV)
            or DEFAULT_BASE_URL
        ).rstrip("/")
        self.api_key = api_key or os.environ.get(API_KEY_ENV) or os.environ.get(_FALLBACK_KEY_ENV)
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, request: ChatRequest) -> str:
        body: dict = {
            "model": request.model_id,
            "messages": [{"role": role, "content": content} for role, content in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.response_format == "json":
            body["response_format"] = {"type": "json_object"}
        data = self._post("chat/completions", body)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"unexpected chat-completions payload: {data!r:.200}") from exc
        if content is None:
            raise GatewayError("chat-completions response had null content")
        return content

    def embed(self, model_id: str, texts: list[str]) -> list[list[float]]:
        """OpenAI-style embeddings endpoint; returns one vector per text."""
        data = self._post("embeddings", {"model": model_id, "input": texts})
        try:
            rows = sorted(data["data"], key=lambda row: row.get("index", 0))
            vectors = [row["embedding"] for row in rows]
        except (KeyError, TypeError) as exc:
            raise GatewayError(f"unexpected embeddings payload: {data!r:.200}") from exc
        if len(vectors) != len(texts):
            raise GatewayError(f"asked for {len(texts)} embeddings, got {len(vectors)}")
        return vectors

    def _post(self, path: str, body: dict) -> dict:
        if not self.api_key:
            raise GatewayError(f"no API key: set {API_KEY_ENV} (or {_FALLBACK_KEY_ENV})")
        resp = self.session.post(
            f"{self.base_url}/{path}",
            json=body,
            headers={"Authorization": f"Bearer {self.api_key}"},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return resp.json()


@dataclass
class GatewayConfig:
    max_retries: int = 3
    backoff_base: float = 0.5
    max_in_flight: int = 4
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)


class LlmGateway:
    """Caching, retrying front over a backend. Safe for concurrent calls."""

    def __init__(
        self,
        backend,
        cache_dir: str | Path | None = None,
        config: GatewayConfig | None = None,
    ):
        self.backend = backend
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.config = config or GatewayConfig()
        self._slots = threading.Semaphore(self.config.max_in_flight)

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = request.request_hash()
        cached = self._cache_read(key)
        if cached is not None:
            self._check_format(request, cached)
            return ChatResponse(content=cached, cached=True, backend=self.backend.name)

        last_exc: Exception | None = None
        attempts = 0
        with self._slots:
            for attempt in range(self.config.max_retries):
                attempts = attempt + 1
                try:
                    content = self.backend.complete(request)
                    break
                except (requests.RequestException, ConnectionError, TimeoutError) as exc:
                    last_exc = exc
                    log.warning("gateway attempt %d/%d failed: %r", attempts, self.config.max_retries, exc)
                    if attempt + 1 < self.config.max_retries:
                        self.config.sleep(self.config.backoff_base * (2**attempt))
            else:
                raise GatewayRetryError(
                    f"backend unreachable after {attempts} attempts: {last_exc!r}", attempts=attempts
                )
        self._check_format(request, content)
        self._cache_write(key, content)
        return ChatResponse(content=content, cached=False, backend=self.backend.name)

    def embed(self, model_id: str, texts: list[str]) -> list[list[float]]:
        """Embed texts through the backend, with the same cache and retry."""
        if not texts:
            return []
        blob = json.dumps({"embed": model_id, "input": texts}, ensure_ascii=False, sort_keys=True)
        key = hashlib.sha256(blob.encode("utf-8")).hexdigest()
        cached = self._cache_read(key)
        if cached is not None:
            return json.loads(cached)
        embed_fn = getattr(self.backend, "embed", None)
        if embed_fn is None:
            raise GatewayError(f"the {self.backend.name} backend does not serve embeddings")
        last_exc: Exception | None = None
        attempts = 0
        with self._slots:
            for attempt in range(self.config.max_retries):
                attempts = attempt + 1
                try:
                    vectors = embed_fn(model_id, texts)
                    break
                except (requests.RequestException, ConnectionError, TimeoutError) as exc:
                    last_exc = exc
                    log.warning("embeddings attempt %d/%d failed: %r", attempts, self.config.max_retries, exc)
                    if attempt + 1 < self.config.max_retries:
                        self.config.sleep(self.config.backoff_base * (2**attempt))
            else:
                raise GatewayRetryError(
                    f"embeddings backend unreachable after {attempts} attempts: {last_exc!r}",
                    attempts=attempts,
                )
        self._cache_write(key, json.dumps(vectors))
        return vectors

    def _check_format(self, request: ChatRequest, content: str) -> None:
        if request.response_format != "json":
            return
        try:
            json.loads(content)
        except json.JSONDecodeError as exc:
            raise GatewayFormatError(f"expected JSON content, got: {content[:200]!r}") from exc

    def _cache_path(self, key: str) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"{key}.json"

    def _cache_read(self, key: str) -> str | None:
        path = self._cache_path(key)
        if path is None or not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["content"]

    def _cache_write(self, key: str, content: str) -> None:
        path = self._cache_path(key)
        if path is None:
            return
        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump({"request_hash": key, "content": content}, fh, ensure_ascii=False)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def mock_gateway(
    table: dict[str, str] | None = None,
    fixtures: str | Path | None = None,
    cache_dir: str | Path | None = None,
) -> LlmGateway:
    if fixtures is not None:
        backend = MockBackend.from_fixtures(fixtures)
        backend.table.update(table or {})
    else:
        backend = MockBackend(table)
    return LlmGateway(backend, cache_dir=cache_dir)
