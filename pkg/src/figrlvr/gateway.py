"""Client for external generation services plus an in-process mock model.

Requests go to ``POST {endpoint}/chat/completions`` as a chat-completions style
JSON body; see docs/gateway-protocol.md for the exact schema. Transient
failures (transport errors, 429/502/503/504) are retried with exponential
backoff; every attempt carries the same ``Idempotency-Key`` so a retried
request is served at most once.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import httpx
from tenacity import Retrying, retry_if_exception, stop_after_attempt, wait_exponential

from .errors import (
    GatewayError,
    GatewayPayloadError,
    GatewayServiceError,
    GatewayTransportError,
    RejectedInputError,
)

logger = logging.getLogger(__name__)

TRANSIENT_STATUS = frozenset({429, 502, 503, 504})
MOCK_BASE_URL = "http://mock.invalid/v1"
DEFAULT_MOCK_TEXT = "<think>x</think><answer>not sarcastic</answer>"


@dataclass(frozen=True)
class ImagePayload:
    """Opaque image bytes; never decoded locally."""
    data: bytes
    media_type: str = "image/jpeg"

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.data).hexdigest()

    def data_url(self) -> str:
        encoded = base64.b64encode(self.data).decode("ascii")
        return f"data:{self.media_type};base64,{encoded}"


@dataclass(frozen=True)
class DecodeParams:
    temperature: float = 0.0
    max_tokens: int = 1024


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    model_id: str
    image: ImagePayload | None = None
    decode: DecodeParams = field(default_factory=DecodeParams)
    sample_index: int = 0

    def __post_init__(self):
        if not self.prompt:
            raise RejectedInputError("prompt must be non-empty")
        if self.decode.max_tokens < 1:
            raise RejectedInputError(f"max_tokens must be >= 1, got {self.decode.max_tokens}")
        if self.sample_index < 0:
            raise RejectedInputError(f"sample_index must be >= 0, got {self.sample_index}")

    @property
    def fingerprint(self) -> str:
        return prompt_fingerprint(self.prompt, self.image.digest if self.image else None)

    @property
    def request_id(self) -> str:
        """Deterministic id; doubles as the idempotency key.

        Sampled decoding (temperature > 0) mixes in ``sample_index`` so that
        repeated draws for one prompt are served as separate completions.
        """
        parts: dict = {
            "fingerprint": self.fingerprint,
            "model": self.model_id,
            "temperature": self.decode.temperature,
            "max_tokens": self.decode.max_tokens,
        }
        if self.decode.temperature > 0:
            parts["sample_index"] = self.sample_index
        material = json.dumps(parts, sort_keys=True)
        return hashlib.sha256(material.encode("utf-8")).hexdigest()[:32]


@dataclass(frozen=True)
class GenerationOutput:
    text: str
    request_id: str
    latency_ms: int


@dataclass
class BatchResult:
    """Per-item outcome of generate_batch; exactly one of output/error is set."""
    request: GenerationRequest
    output: GenerationOutput | None = None
    error: GatewayError | None = None

    @property
    def success(self) -> bool:
        return self.output is not None


@dataclass(frozen=True)
class GatewaySettings:
    endpoint: str
    api_key: str | None = None
    timeout_ms: int = 60_000
    max_retries: int = 3
    backoff_initial_s: float = 0.5
    backoff_max_s: float = 8.0

    @classmethod
    def from_env(cls, **overrides) -> "GatewaySettings":
        """Read GATEWAY_ENDPOINT, GATEWAY_API_KEY and GATEWAY_TIMEOUT_MS."""
        values: dict = {
            "endpoint": os.environ.get("GATEWAY_ENDPOINT", ""),
            "api_key": os.environ.get("GATEWAY_API_KEY") or None,
        }
        timeout = os.environ.get("GATEWAY_TIMEOUT_MS")
        if timeout:
            values["timeout_ms"] = int(timeout)
        values.update({k: v for k, v in overrides.items() if v is not None})
        if not values["endpoint"]:
            raise RejectedInputError("No gateway endpoint: set GATEWAY_ENDPOINT or gateway.endpoint")
        return cls(**values)


def prompt_fingerprint(prompt: str, image_digest: str | None = None) -> str:
    material = f"{prompt}\x00{image_digest or ''}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def build_payload(request: GenerationRequest) -> dict:
    content: list[dict] = [{"type": "text", "text": request.prompt}]
    if request.image is not None:
        content.append({"type": "image_url", "image_url": {"url": request.image.data_url()}})
    return {
        "model": request.model_id,
        "messages": [{"role": "user", "content": content}],
        "temperature": request.decode.temperature,
        "max_tokens": request.decode.max_tokens,
    }


def _is_transient(exc: BaseException) -> bool:
    if isinstance(exc, httpx.TransportError):
        return True
    return isinstance(exc, GatewayServiceError) and exc.status_code in TRANSIENT_STATUS


class GatewayClient:
    """Thread-safe client for one generation endpoint."""

    def __init__(self, settings: GatewaySettings, transport: httpx.BaseTransport | None = None):
        self.settings = settings
        headers = {"Content-Type": "application/json"}
        if settings.api_key:
            headers["Authorization"] = f"Bearer {settings.api_key}"
        self._client = httpx.Client(
            base_url=settings.endpoint.rstrip("/"),
            headers=headers,
            timeout=settings.timeout_ms / 1000.0,
            transport=transport,
        )

    def __enter__(self) -> "GatewayClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        self._client.close()

    def _post_once(self, payload: dict, request_id: str) -> str:
        response = self._client.post(
            "/chat/completions",
            json=payload,
            headers={"Idempotency-Key": request_id},
        )
        if response.status_code >= 400:
            raise GatewayServiceError(response.status_code, response.text[:200])
        try:
            text = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise GatewayPayloadError(f"response has no choices[0].message.content: {e}") from e
        if not isinstance(text, str):
            raise GatewayPayloadError("choices[0].message.content is not a string")
        return text

    def generate(self, request: GenerationRequest) -> GenerationOutput:
        """One completion, retried on transient failures.

        Raises:
            GatewayTransportError: Network failure after all retries, or any
                other client-side HTTP error.
            GatewayServiceError: Non-success status.
            GatewayPayloadError: Success status without completion text, or a
                body that could not be decoded.
        """
        payload = build_payload(request)
        request_id = request.request_id
        retrying = Retrying(
            stop=stop_after_attempt(self.settings.max_retries + 1),
            wait=wait_exponential(
                multiplier=self.settings.backoff_initial_s,
                max=self.settings.backoff_max_s,
            ),
            retry=retry_if_exception(_is_transient),
            reraise=True,
        )
        started = time.perf_counter()
        try:
            for attempt in retrying:
                with attempt:
                    if attempt.retry_state.attempt_number > 1:
                        logger.debug(
                            f"Retrying request {request_id} "
                            f"(attempt {attempt.retry_state.attempt_number})"
                        )
                    text = self._post_once(payload, request_id)
        except httpx.TransportError as e:
            raise GatewayTransportError(
                f"{type(e).__name__} after {self.settings.max_retries + 1} attempts: {e}"
            ) from e
        except httpx.DecodingError as e:
            raise GatewayPayloadError(f"response body could not be decoded: {e}") from e
        except (httpx.HTTPError, httpx.InvalidURL) as e:
            raise GatewayTransportError(f"{type(e).__name__}: {e}") from e
        latency_ms = int(round((time.perf_counter() - started) * 1000))
        return GenerationOutput(text=text, request_id=request_id, latency_ms=latency_ms)

    def generate_batch(
        self,
        requests: Sequence[GenerationRequest],
        max_in_flight: int = 4,
    ) -> list[BatchResult]:
        """Run requests with at most ``max_in_flight`` outstanding; results keep input order."""
        if max_in_flight < 1:
            raise RejectedInputError(f"max_in_flight must be >= 1, got {max_in_flight}")
        if not requests:
            return []

        def run_one(request: GenerationRequest) -> BatchResult:
            try:
                return BatchResult(request=request, output=self.generate(request))
            except GatewayError as e:
                logger.warning(f"Request {request.request_id} failed: {e}")
                return BatchResult(request=request, error=e)

        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            futures = [pool.submit(run_one, request) for request in requests]
            results = [future.result() for future in futures]

        failed = sum(1 for r in results if not r.success)
        logger.info(f"Batch of {len(results)} requests finished; {failed} failed")
        return results


def generate(
    request: GenerationRequest,
    endpoint: str | GatewaySettings,
    transport: httpx.BaseTransport | None = None,
) -> GenerationOutput:
    """One-shot completion; a bare endpoint picks up key and timeout from the environment."""
    if isinstance(endpoint, GatewaySettings):
        settings = endpoint
    else:
        settings = GatewaySettings.from_env(endpoint=endpoint)
    with GatewayClient(settings, transport=transport) as client:
        return client.generate(request)


_TOKEN_RE = re.compile(r"\S+")


def truncate_tokens(text: str, max_tokens: int) -> str:
    """Keep the first ``max_tokens`` whitespace-delimited tokens, whitespace intact."""
    for count, match in enumerate(_TOKEN_RE.finditer(text), start=1):
        if count == max_tokens:
            return text[:match.end()]
    return text


class MockModel:
    """Deterministic in-process endpoint backed by ``httpx.MockTransport``.

    Responses are looked up by ``prompt_fingerprint(prompt, image digest)``.
    The mock records each served completion once per idempotency key, tracks
    peak concurrency and can inject latency or failures.

    Args:
        script: Fingerprint to canned completion text.
        default: Text for unscripted fingerprints.
        latency_s: Fixed delay, or a callable of the fingerprint.
        transient_failures: Fingerprint to number of 503 answers before success.
        fail_fingerprints: Fingerprints that always answer 500.
    """

    def __init__(
        self,
        script: Mapping[str, str] | None = None,
        default: str = DEFAULT_MOCK_TEXT,
        latency_s: float | Callable[[str], float] = 0.0,
        transient_failures: Mapping[str, int] | None = None,
        fail_fingerprints: Sequence[str] = (),
    ):
        self.script = dict(script or {})
        self.default = default
        self.latency_s = latency_s
        self._pending_failures = dict(transient_failures or {})
        self.fail_fingerprints = set(fail_fingerprints)
        self.calls: list[dict] = []
        self.served: dict[str, str] = {}
        self.attempts = 0
        self.peak_in_flight = 0
        self._in_flight = 0
        self._lock = threading.Lock()

    @property
    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handle)

    def client(self, **settings) -> GatewayClient:
        settings.setdefault("endpoint", MOCK_BASE_URL)
        settings.setdefault("backoff_initial_s", 0.0)
        return GatewayClient(GatewaySettings(**settings), transport=self.transport)

    def respond(self, fingerprint: str) -> str:
        return self.script.get(fingerprint, self.default)

    def _delay(self, fingerprint: str) -> float:
        if callable(self.latency_s):
            return float(self.latency_s(fingerprint))
        return float(self.latency_s)

    def handle(self, request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content.decode("utf-8"))
        prompt, digest = _unpack_content(body["messages"][0]["content"])
        fingerprint = prompt_fingerprint(prompt, digest)
        key = request.headers.get("Idempotency-Key", fingerprint)

        with self._lock:
            self.attempts += 1
            self._in_flight += 1
            self.peak_in_flight = max(self.peak_in_flight, self._in_flight)
        try:
            delay = self._delay(fingerprint)
            if delay > 0:
                time.sleep(delay)
            with self._lock:
                if fingerprint in self.fail_fingerprints:
                    return httpx.Response(500, json={"error": "scripted failure"})
                if self._pending_failures.get(fingerprint, 0) > 0:
                    self._pending_failures[fingerprint] -= 1
                    return httpx.Response(503, json={"error": "try again"})
                if key in self.served:
                    text = self.served[key]
                else:
                    text = truncate_tokens(self.respond(fingerprint), int(body["max_tokens"]))
                    self.served[key] = text
                    self.calls.append(
                        {"fingerprint": fingerprint, "model": body["model"], "text": text}
                    )
            return httpx.Response(
                200,
                json={"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]},
            )
        finally:
            with self._lock:
                self._in_flight -= 1


def _unpack_content(content: list[dict]) -> tuple[str, str | None]:
    prompt = ""
    digest = None
    for part in content:
        if part.get("type") == "text":
            prompt = part["text"]
        elif part.get("type") == "image_url":
            url = part["image_url"]["url"]
            encoded = url.split(",", 1)[1]
            digest = hashlib.sha256(base64.b64decode(encoded)).hexdigest()
    return prompt, digest


def mock_model(script: Mapping[str, str] | None = None, default: str = DEFAULT_MOCK_TEXT, **kwargs) -> MockModel:
    return MockModel(script=script, default=default, **kwargs)
