"""LLM dispatch: an OpenAI-compatible HTTP provider and a deterministic mock.

Both providers expose the same ``complete(prompt_text) -> Completion``
surface, so the rest of the pipeline never knows which one it is talking
to. The mock is a pure digest-keyed lookup over scripted replies and
scripted errors, which is what every test in this repo runs against.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from threading import Lock
from typing import Any, Callable

import httpx

BACKOFF_BASE_SECONDS = 1.0


class ProviderError(Exception):
    """Base class for everything the provider layer can raise."""


class MissingApiKeyError(ProviderError):
    pass


class ProviderTimeoutError(ProviderError):
    pass


class HttpStatusError(ProviderError):
    def __init__(self, status: int, detail: str = ""):
        self.status = status
        super().__init__(f"provider returned HTTP {status}" + (f": {detail}" if detail else ""))

    @property
    def retryable(self) -> bool:
        return self.status == 429 or self.status >= 500


class MalformedProviderResponseError(ProviderError):
    """The provider answered, but without usable message content."""


class FixtureMissError(MalformedProviderResponseError):
    """The mock provider has no scripted entry for this prompt digest."""


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str
    model_id: str
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = 0.0
    timeout_seconds: float = 120.0
    max_retries: int = 2

    def __post_init__(self) -> None:
        if not self.endpoint_url.startswith(("http://", "https://")):
            raise ValueError(f"endpoint_url must be absolute http(s): {self.endpoint_url!r}")
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must be within [0, 2]")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


@dataclass(frozen=True)
class Completion:
    raw_text: str
    latency_seconds: float  # wall clock across all attempts, including backoff
    attempt_count: int
    provider_id: str


def prompt_digest(prompt_text: str) -> str:
    return hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()


def build_request_body(prompt_text: str, config: ProviderConfig) -> dict:
    """The wire body: one user message carrying the whole prompt."""
    return {
        "model": config.model_id,
        "messages": [{"role": "user", "content": prompt_text}],
        "temperature": config.temperature,
    }


def _complete_with_retries(
    send_once: Callable[[], str],
    max_retries: int,
    sleep_fn: Callable[[float], None],
    provider_id: str,
) -> Completion:
    start = time.perf_counter()
    attempt = 0
    while True:
        attempt += 1
        try:
            text = send_once()
        except (ProviderTimeoutError, HttpStatusError) as exc:
            if isinstance(exc, HttpStatusError) and not exc.retryable:
                raise
            if attempt > max_retries:
                raise
            sleep_fn(BACKOFF_BASE_SECONDS * 2 ** (attempt - 1))
            continue
        return Completion(
            raw_text=text,
            latency_seconds=time.perf_counter() - start,
            attempt_count=attempt,
            provider_id=provider_id,
        )


class HttpProvider:
    """OpenAI-compatible chat-completion client with retry and backoff."""

    def __init__(
        self,
        config: ProviderConfig,
        transport: httpx.BaseTransport | None = None,
        sleep_fn: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.provider_id = config.model_id
        self._transport = transport
        self._sleep = sleep_fn

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise MissingApiKeyError(
                f"environment variable {self.config.api_key_env} is not set"
            )
        return key

    def _send_once(self, prompt_text: str, api_key: str) -> str:
        url = self.config.endpoint_url.rstrip("/") + "/chat/completions"
        try:
            with httpx.Client(
                transport=self._transport, timeout=self.config.timeout_seconds
            ) as client:
                resp = client.post(
                    url,
                    json=build_request_body(prompt_text, self.config),
                    headers={"Authorization": f"Bearer {api_key}"},
                )
        except httpx.TimeoutException as exc:
            raise ProviderTimeoutError(str(exc)) from exc
        if resp.status_code != 200:
            raise HttpStatusError(resp.status_code, resp.text[:200])
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, LookupError, TypeError) as exc:
            raise MalformedProviderResponseError(
                f"response body lacks message content: {exc}"
            ) from exc
        if not isinstance(content, str):
            raise MalformedProviderResponseError("message content is not text")
        return content

    def complete(self, prompt_text: str) -> Completion:
        api_key = self._api_key()
        return _complete_with_retries(
            lambda: self._send_once(prompt_text, api_key),
            self.config.max_retries,
            self._sleep,
            self.provider_id,
        )


# A fixture entry is a scripted reply (str), a scripted error (exception
# instance), or a list of those consumed one per call (last repeats).
FixtureEntry = Any


class MockProvider:
    """Digest-keyed scripted provider; pure lookup, no network.

    Mock lookups never sleep between retries, so fault-injection tests run
    at full speed.
    """

    provider_id = "mock"

    def __init__(self, fixtures: dict[str, FixtureEntry], max_retries: int = 2):
        self._fixtures = dict(fixtures)
        self._cursors: dict[str, int] = {}
        self._lock = Lock()
        self.max_retries = max_retries

    def _send_once(self, prompt_text: str) -> str:
        digest = prompt_digest(prompt_text)
        with self._lock:
            if digest not in self._fixtures:
                raise FixtureMissError(f"no scripted reply for prompt digest {digest}")
            entry = self._fixtures[digest]
            if isinstance(entry, list):
                if not entry:
                    raise FixtureMissError(f"empty script for prompt digest {digest}")
                cursor = self._cursors.get(digest, 0)
                self._cursors[digest] = cursor + 1
                entry = entry[min(cursor, len(entry) - 1)]
        if isinstance(entry, Exception):
            raise entry
        return entry

    def complete(self, prompt_text: str) -> Completion:
        return _complete_with_retries(
            lambda: self._send_once(prompt_text),
            self.max_retries,
            lambda _seconds: None,
            self.provider_id,
        )


def mock_provider(fixtures: dict[str, FixtureEntry], max_retries: int = 2) -> MockProvider:
    return MockProvider(fixtures, max_retries=max_retries)


def complete(prompt_text: str, config: ProviderConfig) -> Completion:
    """One-shot convenience over a throwaway HttpProvider."""
    return HttpProvider(config).complete(prompt_text)


def _error_from_json(obj: dict) -> ProviderError:
    kind = obj.get("kind", "malformed")
    message = obj.get("message", f"scripted {kind} error")
    if kind == "timeout":
        return ProviderTimeoutError(message)
    if kind == "http":
        return HttpStatusError(int(obj.get("status", 500)), message)
    if kind == "miss":
        return FixtureMissError(message)
    return MalformedProviderResponseError(message)


def _entry_from_json(obj: dict) -> FixtureEntry:
    if "reply" in obj:
        return obj["reply"]
    if "error" in obj:
        return _error_from_json(obj["error"])
    if "script" in obj:
        return [_entry_from_json(e) for e in obj["script"]]
    raise ValueError(f"fixture entry needs 'reply', 'error', or 'script': {sorted(obj)}")


def load_fixtures_dir(path: str | Path) -> dict[str, FixtureEntry]:
    """Read ``<digest>.json`` files into a fixtures map for MockProvider."""
    fixtures: dict[str, FixtureEntry] = {}
    for file in sorted(Path(path).glob("*.json")):
        fixtures[file.stem] = _entry_from_json(json.loads(file.read_text(encoding="utf-8")))
    return fixtures


def write_fixture(directory: str | Path, prompt_text: str, entry: dict) -> Path:
    """Script a reply for a prompt; used by fixture-building tools and tests."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / f"{prompt_digest(prompt_text)}.json"
    target.write_text(json.dumps(entry, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return target


def provider_from_config(obj: dict):
    """Build a provider from the config file's ``provider`` object."""
    kind = obj.get("kind", "http")
    if kind == "mock":
        fixtures_dir = obj.get("fixtures_dir")
        if not fixtures_dir:
            raise ValueError("mock provider config needs 'fixtures_dir'")
        return MockProvider(
            load_fixtures_dir(fixtures_dir), max_retries=int(obj.get("max_retries", 2))
        )
    if kind == "http":
        return HttpProvider(
            ProviderConfig(
                endpoint_url=obj["endpoint_url"],
                model_id=obj.get("model_id", "gpt-4"),
                api_key_env=obj.get("api_key_env", "OPENAI_API_KEY"),
                temperature=float(obj.get("temperature", 0.0)),
                timeout_seconds=float(obj.get("timeout_seconds", 120.0)),
                max_retries=int(obj.get("max_retries", 2)),
            )
        )
    raise ValueError(f"unknown provider kind: {kind!r}")
