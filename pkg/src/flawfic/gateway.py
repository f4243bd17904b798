"""Chat-model access: one interface over vendor HTTP protocols, plus a
deterministic record/replay fixture store.

A Provider turns one ChatRequest into one ChatResponse (all n_samples
included; adapters for vendors without native multi-sample emulate it
with sequential calls and concatenate in call order). The module-level
``complete`` adds the retry policy; Gateway adds the in-flight bound and
cost accounting and is the object the rest of the package consumes.

Fixtures are keyed by a sha256 digest of the request fields that select
a completion: model_name, messages, temperature, n_samples and
reasoning_effort. Each fixture file stores the full request and response
as JSON; replay verifies the stored request against the incoming one, so
a digest collision cannot silently serve the wrong response.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx

from flawfic.core import FlawficError, ValidationError

__all__ = [
    "Role",
    "ChatMessage",
    "ChatRequest",
    "Usage",
    "ChatResponse",
    "GatewayError",
    "AuthError",
    "TransientError",
    "RateLimitExhaustedError",
    "ProviderExhaustedError",
    "RequestTimeoutError",
    "MalformedResponseError",
    "CapabilityError",
    "PartialResponseError",
    "MissingFixtureError",
    "FixtureMismatchError",
    "NoProviderError",
    "ProviderConfig",
    "Provider",
    "HttpProvider",
    "ScriptedProvider",
    "FixtureStore",
    "ReplayProvider",
    "RecordingProvider",
    "Router",
    "Gateway",
    "request_digest",
    "complete",
    "DEFAULT_TEMPERATURE",
    "DEFAULT_MAX_TOKENS",
    "REASONING_MAX_TOKENS",
    "MAX_ATTEMPTS",
    "DEFAULT_TIMEOUT_S",
]

DEFAULT_TEMPERATURE = 0.5
DEFAULT_MAX_TOKENS = 4096
REASONING_MAX_TOKENS = 8192
MAX_ATTEMPTS = 5
DEFAULT_TIMEOUT_S = 120.0


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model_name: str
    messages: tuple[ChatMessage, ...]
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = 0  # 0 means "apply the default rule"
    n_samples: int = 1
    reasoning_effort: Optional[str] = None  # low | medium | high
    extended_thinking: bool = False

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValidationError("request has no messages")
        if self.n_samples < 1:
            raise ValidationError("n_samples must be >= 1")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.reasoning_effort is not None and self.reasoning_effort not in (
            "low",
            "medium",
            "high",
        ):
            raise ValidationError(f"bad reasoning_effort {self.reasoning_effort!r}")
        if self.max_tokens <= 0:
            default = (
                REASONING_MAX_TOKENS
                if self.reasoning_effort is not None or self.extended_thinking
                else DEFAULT_MAX_TOKENS
            )
            object.__setattr__(self, "max_tokens", default)

    @staticmethod
    def user(model_name: str, prompt: str, **kwargs) -> "ChatRequest":
        return ChatRequest(
            model_name=model_name,
            messages=(ChatMessage(Role.USER, prompt),),
            **kwargs,
        )


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __add__(self, other: "Usage") -> "Usage":
        return Usage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )


@dataclass(frozen=True)
class ChatResponse:
    completions: tuple[str, ...]
    usage: Usage
    provider_id: str
    latency_ms: float = 0.0


class GatewayError(FlawficError):
    pass


class AuthError(GatewayError):
    pass


class TransientError(GatewayError):
    """Retryable failure: HTTP 429, 5xx, or a timed-out attempt."""

    def __init__(self, message: str, kind: str):
        super().__init__(message)
        self.kind = kind  # rate_limit | server | timeout


class RateLimitExhaustedError(GatewayError):
    pass


class ProviderExhaustedError(GatewayError):
    pass


class RequestTimeoutError(GatewayError):
    pass


class MalformedResponseError(GatewayError):
    pass


class CapabilityError(GatewayError):
    pass


class PartialResponseError(GatewayError):
    pass


class MissingFixtureError(GatewayError):
    def __init__(self, digest: str):
        super().__init__(f"no fixture recorded for request digest {digest}")
        self.digest = digest


class FixtureMismatchError(GatewayError):
    pass


class NoProviderError(GatewayError):
    pass


# ---------------------------------------------------------------------------
# request digest & fixture store


def _digest_payload(request: ChatRequest) -> dict:
    return {
        "model_name": request.model_name,
        "messages": [
            {"role": m.role.value, "content": m.content} for m in request.messages
        ],
        "temperature": float(request.temperature),
        "n_samples": request.n_samples,
        "reasoning_effort": request.reasoning_effort,
    }


def request_digest(request: ChatRequest) -> str:
    """Stable content digest of the completion-selecting request fields."""
    canonical = json.dumps(
        _digest_payload(request), sort_keys=True, ensure_ascii=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _request_to_dict(request: ChatRequest) -> dict:
    d = _digest_payload(request)
    d["max_tokens"] = request.max_tokens
    d["extended_thinking"] = request.extended_thinking
    return d


def _request_from_dict(d: dict) -> ChatRequest:
    return ChatRequest(
        model_name=d["model_name"],
        messages=tuple(
            ChatMessage(Role(m["role"]), m["content"]) for m in d["messages"]
        ),
        temperature=d["temperature"],
        max_tokens=d.get("max_tokens", 0),
        n_samples=d["n_samples"],
        reasoning_effort=d.get("reasoning_effort"),
        extended_thinking=d.get("extended_thinking", False),
    )


def _response_to_dict(response: ChatResponse) -> dict:
    return {
        "completions": list(response.completions),
        "usage": {
            "prompt_tokens": response.usage.prompt_tokens,
            "completion_tokens": response.usage.completion_tokens,
        },
        "provider_id": response.provider_id,
        "latency_ms": response.latency_ms,
    }


def _response_from_dict(d: dict) -> ChatResponse:
    return ChatResponse(
        completions=tuple(d["completions"]),
        usage=Usage(**d["usage"]),
        provider_id=d["provider_id"],
        latency_ms=d.get("latency_ms", 0.0),
    )


class FixtureStore:
    """One JSON file per request digest under a directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path_for(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def record(self, request: ChatRequest, response: ChatResponse) -> Path:
        digest = request_digest(request)
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.path_for(digest)
        payload = {
            "digest": digest,
            "request": _request_to_dict(request),
            "response": _response_to_dict(response),
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, path)
        return path

    def replay(self, request: ChatRequest) -> ChatResponse:
        digest = request_digest(request)
        path = self.path_for(digest)
        if not path.exists():
            raise MissingFixtureError(digest)
        payload = json.loads(path.read_text(encoding="utf-8"))
        stored = _request_from_dict(payload["request"])
        if _digest_payload(stored) != _digest_payload(request):
            raise FixtureMismatchError(
                f"fixture {digest} stores a different request; refusing to replay"
            )
        return _response_from_dict(payload["response"])

    def __contains__(self, request: ChatRequest) -> bool:
        return self.path_for(request_digest(request)).exists()


# ---------------------------------------------------------------------------
# providers


class Provider:
    """One request in, one response out; single attempt, no retry."""

    provider_id: str = "provider"

    def send(self, request: ChatRequest) -> ChatResponse:
        raise NotImplementedError


@dataclass(frozen=True)
class ProviderConfig:
    name: str
    endpoint: str
    protocol: str  # "openai" | "anthropic"
    credential_env: str
    models: tuple[str, ...] = ()  # empty = serves any model
    supports_n_samples: bool = False
    supports_reasoning_effort: bool = False
    supports_extended_thinking: bool = False
    timeout_s: float = DEFAULT_TIMEOUT_S

    def __post_init__(self) -> None:
        if self.protocol not in ("openai", "anthropic"):
            raise ValidationError(f"unknown protocol {self.protocol!r}")


class HttpProvider(Provider):
    """Adapter for openai- and anthropic-style chat completion APIs.

    Credentials come from the environment variable named in the config,
    read at call time and never persisted. n_samples is emulated with
    sequential single-sample calls when the vendor lacks a native
    parameter; completions concatenate in call order and usage is summed.
    """

    def __init__(self, config: ProviderConfig, transport: Optional[httpx.BaseTransport] = None):
        self.config = config
        self.provider_id = config.name
        self._client = httpx.Client(
            timeout=config.timeout_s, transport=transport
        )

    def _credential(self) -> str:
        value = os.environ.get(self.config.credential_env, "")
        if not value:
            raise AuthError(
                f"credential env var {self.config.credential_env} is not set"
            )
        return value

    def _check_capabilities(self, request: ChatRequest) -> None:
        if request.reasoning_effort and not self.config.supports_reasoning_effort:
            raise CapabilityError(
                f"provider {self.provider_id} does not support reasoning_effort"
            )
        if request.extended_thinking and not self.config.supports_extended_thinking:
            raise CapabilityError(
                f"provider {self.provider_id} does not support extended_thinking"
            )

    def send(self, request: ChatRequest) -> ChatResponse:
        self._check_capabilities(request)
        started = time.monotonic()
        if request.n_samples == 1 or self.config.supports_n_samples:
            completions, usage = self._send_once(request, request.n_samples)
        else:
            completions, usage = [], Usage()
            single = _request_from_dict({**_request_to_dict(request), "n_samples": 1})
            for _ in range(request.n_samples):
                got, u = self._send_once(single, 1)
                completions.extend(got)
                usage = usage + u
        if len(completions) < request.n_samples:
            raise PartialResponseError(
                f"provider returned {len(completions)} of {request.n_samples} samples"
            )
        latency_ms = (time.monotonic() - started) * 1000.0
        return ChatResponse(
            completions=tuple(completions),
            usage=usage,
            provider_id=self.provider_id,
            latency_ms=latency_ms,
        )

    def _send_once(self, request: ChatRequest, n: int) -> tuple[list[str], Usage]:
        if self.config.protocol == "openai":
            body, headers = self._openai_call(request, n)
        else:
            body, headers = self._anthropic_call(request, n)
        try:
            resp = self._client.post(self.config.endpoint, json=body, headers=headers)
        except httpx.TimeoutException as exc:
            raise TransientError(f"timeout after {self.config.timeout_s}s", "timeout") from exc
        except httpx.HTTPError as exc:
            raise TransientError(f"transport failure: {exc}", "server") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"provider rejected credentials (HTTP {resp.status_code})")
        if resp.status_code == 429:
            raise TransientError("rate limited (HTTP 429)", "rate_limit")
        if resp.status_code >= 500:
            raise TransientError(f"server error (HTTP {resp.status_code})", "server")
        if resp.status_code >= 400:
            raise MalformedResponseError(
                f"provider returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            payload = resp.json()
            if self.config.protocol == "openai":
                completions = [c["message"]["content"] for c in payload["choices"]]
                u = payload.get("usage", {})
                usage = Usage(
                    prompt_tokens=int(u.get("prompt_tokens", 0)),
                    completion_tokens=int(u.get("completion_tokens", 0)),
                )
            else:
                completions = [
                    part["text"]
                    for part in payload["content"]
                    if part.get("type") == "text"
                ]
                u = payload.get("usage", {})
                usage = Usage(
                    prompt_tokens=int(u.get("input_tokens", 0)),
                    completion_tokens=int(u.get("output_tokens", 0)),
                )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise MalformedResponseError(f"unparseable provider payload: {exc}") from exc
        if not completions:
            raise MalformedResponseError("provider returned no completions")
        return completions, usage

    def _openai_call(self, request: ChatRequest, n: int) -> tuple[dict, dict]:
        body = {
            "model": request.model_name,
            "messages": [
                {"role": m.role.value, "content": m.content} for m in request.messages
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "n": n,
        }
        if request.reasoning_effort:
            body["reasoning_effort"] = request.reasoning_effort
        headers = {"Authorization": f"Bearer {self._credential()}"}
        return body, headers

    def _anthropic_call(self, request: ChatRequest, n: int) -> tuple[dict, dict]:
        system = "\n\n".join(
            m.content for m in request.messages if m.role is Role.SYSTEM
        )
        body = {
            "model": request.model_name,
            "messages": [
                {"role": m.role.value, "content": m.content}
                for m in request.messages
                if m.role is not Role.SYSTEM
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if system:
            body["system"] = system
        if request.extended_thinking:
            body["thinking"] = {
                "type": "enabled",
                "budget_tokens": max(1024, request.max_tokens // 2),
            }
        headers = {
            "x-api-key": self._credential(),
            "anthropic-version": "2023-06-01",
        }
        return body, headers


class ScriptedProvider(Provider):
    """Deterministic provider for tests: a queue of completions or a
    callable mapping requests to completion text."""

    def __init__(
        self,
        script: Sequence[str] | Callable[[ChatRequest], str] | None = None,
        provider_id: str = "scripted",
        usage_per_call: Usage = Usage(10, 20),
    ):
        self.provider_id = provider_id
        self._fn = script if callable(script) else None
        self._queue = list(script) if script is not None and not callable(script) else []
        self._usage = usage_per_call
        self.requests: list[ChatRequest] = []

    def send(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        completions = []
        for _ in range(request.n_samples):
            if self._fn is not None:
                completions.append(self._fn(request))
            else:
                if not self._queue:
                    raise MalformedResponseError("scripted provider queue exhausted")
                completions.append(self._queue.pop(0))
        return ChatResponse(
            completions=tuple(completions),
            usage=Usage(
                self._usage.prompt_tokens * request.n_samples,
                self._usage.completion_tokens * request.n_samples,
            ),
            provider_id=self.provider_id,
            latency_ms=0.0,
        )


class ReplayProvider(Provider):
    """Serves only recorded fixtures; read-only and lock-free."""

    provider_id = "replay"

    def __init__(self, store: FixtureStore):
        self.store = store

    def send(self, request: ChatRequest) -> ChatResponse:
        return self.store.replay(request)


class RecordingProvider(Provider):
    """Delegates to an inner provider and persists every exchange."""

    def __init__(self, inner: Provider, store: FixtureStore):
        self.inner = inner
        self.store = store
        self.provider_id = inner.provider_id

    def send(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.send(request)
        self.store.record(request, response)
        return response


class Router(Provider):
    """Picks the first provider whose model list covers the request."""

    provider_id = "router"

    def __init__(self, providers: Sequence[tuple[tuple[str, ...], Provider]]):
        # each entry: (model names it serves, provider); empty tuple = any
        self._providers = list(providers)

    def send(self, request: ChatRequest) -> ChatResponse:
        for models, provider in self._providers:
            if not models or request.model_name in models:
                return provider.send(request)
        raise NoProviderError(f"no provider configured for model {request.model_name!r}")


# ---------------------------------------------------------------------------
# retry policy, in-flight bound, accounting


def complete(
    request: ChatRequest,
    provider: Provider,
    max_attempts: int = MAX_ATTEMPTS,
    backoff_base_s: float = 0.5,
    sleeper: Callable[[float], None] = time.sleep,
) -> ChatResponse:
    """Send with exponential backoff on transient failures (429/5xx/timeout).

    At most *max_attempts* provider attempts; 4xx other than 429 never
    retries. Exhaustion raises a typed error named for the last failure.
    """
    last: Optional[TransientError] = None
    for attempt in range(max_attempts):
        try:
            response = provider.send(request)
        except TransientError as exc:
            last = exc
            if attempt + 1 < max_attempts:
                sleeper(min(backoff_base_s * (2**attempt), 30.0))
            continue
        if len(response.completions) != request.n_samples:
            raise PartialResponseError(
                f"{len(response.completions)} completions for "
                f"n_samples={request.n_samples}"
            )
        return response
    assert last is not None
    if last.kind == "rate_limit":
        raise RateLimitExhaustedError(
            f"rate limited on all {max_attempts} attempts"
        ) from last
    if last.kind == "timeout":
        raise RequestTimeoutError(f"timed out on all {max_attempts} attempts") from last
    raise ProviderExhaustedError(
        f"transient server failures on all {max_attempts} attempts"
    ) from last


@dataclass
class CallRecord:
    digest: str
    model_name: str
    usage: Usage
    latency_ms: float


class Gateway:
    """Thread-safe front door: request bound, retries, usage ledger."""

    def __init__(
        self,
        provider: Provider,
        max_in_flight: int = 4,
        max_attempts: int = MAX_ATTEMPTS,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.provider = provider
        self._semaphore = threading.Semaphore(max_in_flight)
        self._max_attempts = max_attempts
        self._sleeper = sleeper
        self._lock = threading.Lock()
        self.calls: list[CallRecord] = []

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._semaphore:
            response = complete(
                request,
                self.provider,
                max_attempts=self._max_attempts,
                sleeper=self._sleeper,
            )
        with self._lock:
            self.calls.append(
                CallRecord(
                    digest=request_digest(request),
                    model_name=request.model_name,
                    usage=response.usage,
                    latency_ms=response.latency_ms,
                )
            )
        return response

    @property
    def total_usage(self) -> Usage:
        with self._lock:
            total = Usage()
            for call in self.calls:
                total = total + call.usage
            return total

    @property
    def call_count(self) -> int:
        with self._lock:
            return len(self.calls)
