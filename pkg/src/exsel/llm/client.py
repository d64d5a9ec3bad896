"""HTTP transport and the retrying, concurrency-bounded client."""

from __future__ import annotations

import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import requests

from exsel.llm.cache import EmbeddingCache, cache_key
from exsel.llm.transport import (
    AuthenticationError,
    ChatRequest,
    ClientError,
    EmbeddingVector,
    MalformedResponseError,
    RetryBudgetExceeded,
    Transport,
    TransportConfig,
    TransientServiceError,
)

logger = logging.getLogger(__name__)

_EMBED_API_BATCH = 128


class HttpTransport:
    """OpenAI-compatible REST adapter: POST chat/completions and embeddings."""

    def __init__(self, config: TransportConfig) -> None:
        self.config = config
        self._session = requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.api_key_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, route: str, body: dict) -> dict:
        url = self.config.endpoint_url.rstrip("/") + route
        try:
            response = self._session.post(
                url, json=body, headers=self._headers(), timeout=self.config.timeout_s
            )
        except requests.RequestException as exc:
            raise TransientServiceError(f"request to {route} failed: {exc}") from exc
        if response.status_code in (401, 403):
            raise AuthenticationError(f"{route}: authentication rejected ({response.status_code})")
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientServiceError(f"{route}: status {response.status_code}")
        if response.status_code != 200:
            raise ClientError(f"{route}: unexpected status {response.status_code}: {response.text[:200]}")
        try:
            return response.json()
        except ValueError as exc:
            raise MalformedResponseError(f"{route}: body is not valid JSON") from exc

    def complete(self, request: ChatRequest) -> str:
        body = {
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        payload = self._post("/chat/completions", body)
        try:
            content = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError("chat response missing choices[0].message.content") from exc
        if not isinstance(content, str):
            raise MalformedResponseError("chat message content is not a string")
        return content

    def embed(self, model: str, texts: Sequence[str]) -> list[list[float]]:
        payload = self._post("/embeddings", {"model": model, "input": list(texts)})
        try:
            rows = sorted(payload["data"], key=lambda item: item["index"])
            vectors = [[float(v) for v in row["embedding"]] for row in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponseError("embeddings response missing data[*].embedding") from exc
        if len(vectors) != len(texts):
            raise MalformedResponseError(f"asked for {len(texts)} embeddings, got {len(vectors)}")
        return vectors


class LLMClient:
    """Retry, backoff, concurrency-bound, and embedding-cache layer over a transport.

    `sleep` is injectable so retry schedules can be tested without waiting.
    """

    def __init__(
        self,
        transport: Transport,
        config: TransportConfig | None = None,
        *,
        embedding_cache: EmbeddingCache | None = None,
        sleep: Callable[[float], None] | None = None,
    ) -> None:
        self.transport = transport
        self.config = config if config is not None else getattr(transport, "config", TransportConfig())
        self.cache = embedding_cache if embedding_cache is not None else EmbeddingCache()
        self._sleep = sleep if sleep is not None else time.sleep
        self._gate = threading.Semaphore(self.config.max_in_flight)

    def _with_retries(self, call: Callable[[], object], what: str) -> object:
        attempts = self.config.max_retries + 1
        last: Exception | None = None
        for attempt in range(attempts):
            try:
                with self._gate:
                    return call()
            except TransientServiceError as exc:
                last = exc
                if attempt + 1 < attempts:
                    delay = min(self.config.backoff_base_s * (2**attempt), self.config.backoff_cap_s)
                    logger.warning("%s failed (%s); retry %d/%d in %.1fs", what, exc, attempt + 1, attempts - 1, delay)
                    self._sleep(delay)
        raise RetryBudgetExceeded(f"{what} failed after {attempts} attempts: {last}") from last

    def chat(self, request: ChatRequest) -> str:
        """Chat completion with retries; returns the first choice's content."""
        return self._with_retries(lambda: self.transport.complete(request), "chat")

    def chat_many(self, requests_: Sequence[ChatRequest]) -> list[str]:
        """Run several chat calls, concurrently up to max_in_flight, order-preserving."""
        if not requests_:
            return []
        if self.config.max_in_flight == 1 or len(requests_) == 1:
            return [self.chat(req) for req in requests_]
        with ThreadPoolExecutor(max_workers=self.config.max_in_flight) as pool:
            return list(pool.map(self.chat, requests_))

    def embed_batch(self, model: str, texts: Sequence[str]) -> list[EmbeddingVector]:
        """Embed texts in input order; repeated or previously seen texts hit the cache."""
        if any(not text for text in texts):
            raise ValueError("cannot embed empty text")
        keys = [cache_key(model, text) for text in texts]
        pending: dict[str, str] = {}
        for key, text in zip(keys, texts):
            if key not in self.cache and key not in pending:
                pending[key] = text
        fresh_keys = list(pending)
        for start in range(0, len(fresh_keys), _EMBED_API_BATCH):
            chunk_keys = fresh_keys[start : start + _EMBED_API_BATCH]
            chunk_texts = [pending[k] for k in chunk_keys]
            raw = self._with_retries(lambda ct=chunk_texts: self.transport.embed(model, ct), "embed")
            for key, vector in zip(chunk_keys, raw):
                self.cache.put(key, tuple(vector))
        result = []
        dimension: int | None = None
        for key, text in zip(keys, texts):
            vector = self.cache.get(key)
            if vector is None:
                raise MalformedResponseError(f"no embedding produced for text starting {text[:40]!r}")
            if dimension is None:
                dimension = len(vector)
            elif len(vector) != dimension:
                raise MalformedResponseError(f"embedding dimensions differ within batch: {dimension} vs {len(vector)}")
            result.append(EmbeddingVector(vector))
        return result
