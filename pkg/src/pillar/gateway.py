"""Uniform multi-provider LLM access with enforced structured output.

Every call goes through :meth:`LlmGateway.complete_structured`, which always
returns a document validating against the request's JSON schema. Providers
with native structured output receive the schema in their enforcement
channel; for the rest the schema is embedded in the prompt and the reply is
validated locally, with a corrective retry loop bounded by the provider's
``max_retries``.

The deterministic :class:`MockProvider` is the offline backbone: it replays
scripted responses per purpose tag (falling back to schema-driven synthesis)
and records every request verbatim for inspection.
"""

from __future__ import annotations

import base64
import itertools
import json
import logging
import os
import random
import re
import threading
from dataclasses import dataclass, field
from typing import Any

import jsonschema

from .errors import (
    AuthenticationError,
    GatewayTimeoutError,
    NoVisionProviderError,
    ProviderSelectionError,
    SchemaViolationError,
    TransportError,
)

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_SECONDS = 60.0
DEFAULT_MAX_RETRIES = 3
DEFAULT_MAX_IN_FLIGHT = 8

DEFAULT_KEY_VARS = {
    "openai-like": "OPENAI_API_KEY",
    "gemini-like": "GOOGLE_API_KEY",
    "mistral-like": "MISTRAL_API_KEY",
}


# ---------------------------------------------------------------------------
# Request / response types
# ---------------------------------------------------------------------------

@dataclass
class ProviderCapabilities:
    vision: bool = False
    native_structured_output: bool = False


@dataclass
class ProviderConfig:
    provider_id: str
    kind: str  # openai-like | gemini-like | mistral-like | mock
    model_name: str = ""
    api_key_ref: str = ""  # environment variable name, never the key itself
    capabilities: ProviderCapabilities = field(default_factory=ProviderCapabilities)
    base_url: str | None = None
    timeout: float = DEFAULT_TIMEOUT_SECONDS
    max_retries: int = DEFAULT_MAX_RETRIES
    enabled: bool = True

    def __post_init__(self):
        if not self.provider_id:
            raise ValueError("provider_id must be non-empty")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.max_retries < 1:
            raise ValueError(f"max_retries must be at least 1, got {self.max_retries}")


@dataclass
class TextPart:
    text: str


@dataclass
class ImagePart:
    data: bytes
    media_type: str


UserPart = TextPart | ImagePart


@dataclass(frozen=True)
class ProviderSelector:
    """Either a fixed provider id or a uniform draw over enabled providers."""

    mode: str  # "fixed" | "random_enabled"
    provider_id: str | None = None

    @classmethod
    def fixed(cls, provider_id: str) -> ProviderSelector:
        return cls(mode="fixed", provider_id=provider_id)

    @classmethod
    def random_enabled(cls) -> ProviderSelector:
        return cls(mode="random_enabled")


@dataclass
class StructuredRequest:
    """One schema-constrained completion request.

    ``purpose_tag`` is a stable identifier per call site; it keys mock
    scripting and appears in every gateway error.
    """

    purpose_tag: str
    system_prompt: str
    user_parts: list[Any]
    response_schema: dict[str, Any]
    temperature: float = 0.0
    seed: int | None = None
    provider_selector: ProviderSelector = field(default_factory=ProviderSelector.random_enabled)

    def __post_init__(self):
        if not self.user_parts:
            raise ValueError("request must carry at least one user part")
        if not self.response_schema:
            raise ValueError("response_schema must be non-empty")

    def has_image(self) -> bool:
        return any(isinstance(p, ImagePart) for p in self.user_parts)


@dataclass
class StructuredResponse:
    document: Any
    provider_id: str
    attempts: int
    raw_text: str


@dataclass
class RecordedCall:
    """A verbatim record of one provider invocation (mock provider only)."""

    provider_id: str
    purpose_tag: str
    system_prompt: str
    text: str  # all text content of the conversation, newline-joined
    has_image: bool
    image_media_types: list[str]
    schema: dict[str, Any]
    native_schema: bool
    temperature: float
    seed: int | None


@dataclass
class ProviderCall:
    """What a provider adapter receives: the full conversation so far."""

    purpose_tag: str
    system_prompt: str
    messages: list[dict[str, Any]]  # {"role": ..., "parts": [TextPart|ImagePart]}
    schema: dict[str, Any] | None  # set only when transmitted natively
    response_schema: dict[str, Any]  # always the request schema, for synthesis
    temperature: float
    seed: int | None

    def text(self) -> str:
        chunks = []
        for message in self.messages:
            for part in message["parts"]:
                if isinstance(part, TextPart):
                    chunks.append(part.text)
        return "\n".join(chunks)

    def image_media_types(self) -> list[str]:
        return [p.media_type for m in self.messages for p in m["parts"]
                if isinstance(p, ImagePart)]


# ---------------------------------------------------------------------------
# Provider selection
# ---------------------------------------------------------------------------

def select_provider(
    selector: ProviderSelector,
    enabled: list[ProviderConfig],
    seed: int | None = None,
) -> str:
    """Resolve a selector against the enabled provider list.

    Fixed selectors must name an enabled provider; random selection is
    uniform and deterministic under a fixed seed.
    """
    if not enabled:
        raise ProviderSelectionError("no enabled providers to select from")
    if selector.mode == "fixed":
        for config in enabled:
            if config.provider_id == selector.provider_id:
                return config.provider_id
        raise ProviderSelectionError(
            f"provider {selector.provider_id!r} is not enabled "
            f"(enabled: {sorted(c.provider_id for c in enabled)})")
    ids = sorted(c.provider_id for c in enabled)
    return random.Random(seed).choice(ids)


# ---------------------------------------------------------------------------
# Deterministic mock provider
# ---------------------------------------------------------------------------

def synthesize_document(schema: dict[str, Any], *, tag: str, counter: int,
                        path: str = "") -> Any:
    """Build a deterministic document satisfying ``schema``.

    Used by the mock provider when no scripted response is queued, so fully
    offline runs still produce schema-valid output. Covers the subset of
    JSON Schema this codebase emits (object/array/string/boolean/number,
    enum, const, minLength, minItems).
    """
    if "const" in schema:
        return schema["const"]
    if "enum" in schema:
        return schema["enum"][0]
    schema_type = schema.get("type")
    if schema_type == "object":
        return {
            name: synthesize_document(sub, tag=tag, counter=counter,
                                      path=f"{path}.{name}" if path else name)
            for name, sub in schema.get("properties", {}).items()
        }
    if schema_type == "array":
        count = max(schema.get("minItems", 0), 1)
        items = schema.get("items", {})
        if "enum" in items and schema.get("uniqueItems"):
            return list(items["enum"][:count])
        return [
            synthesize_document(items, tag=tag, counter=counter, path=f"{path}[{i}]")
            for i in range(count)
        ]
    if schema_type == "string":
        text = f"Mock {path or 'text'} for {tag} (call {counter})"
        min_length = schema.get("minLength", 0)
        if len(text) < min_length:
            text = text + "." * (min_length - len(text))
        return text
    if schema_type == "boolean":
        return True
    if schema_type == "integer":
        return int(schema.get("minimum", 0))
    if schema_type == "number":
        return float(schema.get("minimum", 0))
    if schema_type == "null":
        return None
    # Permissive schema: any value satisfies it.
    return f"Mock value for {tag} (call {counter})"


class MockProvider:
    """Scripted, deterministic stand-in for a real provider.

    Responses are queued per purpose tag with :meth:`script`; a dict entry is
    serialized as JSON, a string entry is returned verbatim (use this to
    simulate malformed output). With no queue the provider synthesizes a
    schema-valid document. Every call is recorded; the log is append-only and
    thread-safe.
    """

    def __init__(self, config: ProviderConfig | None = None):
        self.config = config or ProviderConfig(
            provider_id="mock",
            kind="mock",
            model_name="mock-1",
            capabilities=ProviderCapabilities(vision=True, native_structured_output=False),
        )
        self._scripts: dict[str, list[Any]] = {}
        self._log: list[RecordedCall] = []
        self._lock = threading.Lock()
        self._counter = itertools.count(1)

    def script(self, purpose_tag: str, responses: list[Any]) -> None:
        with self._lock:
            self._scripts.setdefault(purpose_tag, []).extend(responses)

    @property
    def calls(self) -> list[RecordedCall]:
        with self._lock:
            return list(self._log)

    def call_count(self) -> int:
        with self._lock:
            return len(self._log)

    def calls_since(self, index: int) -> list[RecordedCall]:
        with self._lock:
            return self._log[index:]

    def calls_for(self, purpose_tag: str) -> list[RecordedCall]:
        return [c for c in self.calls if c.purpose_tag == purpose_tag]

    def reset(self) -> None:
        with self._lock:
            self._scripts.clear()
            self._log.clear()

    def complete(self, call: ProviderCall) -> str:
        with self._lock:
            count = next(self._counter)
            self._log.append(RecordedCall(
                provider_id=self.config.provider_id,
                purpose_tag=call.purpose_tag,
                system_prompt=call.system_prompt,
                text=call.text(),
                has_image=bool(call.image_media_types()),
                image_media_types=call.image_media_types(),
                schema=call.response_schema,
                native_schema=call.schema is not None,
                temperature=call.temperature,
                seed=call.seed,
            ))
            queue = self._scripts.get(call.purpose_tag)
            if queue:
                scripted = queue.pop(0)
                return scripted if isinstance(scripted, str) else json.dumps(scripted)
        return json.dumps(synthesize_document(
            call.response_schema, tag=call.purpose_tag, counter=count))


# ---------------------------------------------------------------------------
# HTTP provider adapters
# ---------------------------------------------------------------------------

def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _flatten_text(parts: list[Any]) -> str:
    return "\n".join(p.text for p in parts if isinstance(p, TextPart))


def build_openai_payload(call: ProviderCall, config: ProviderConfig) -> dict[str, Any]:
    """OpenAI-compatible chat-completions body (also used by Mistral-like)."""
    messages: list[dict[str, Any]] = []
    if call.system_prompt:
        messages.append({"role": "system", "content": call.system_prompt})
    for message in call.messages:
        if message["role"] == "assistant":
            messages.append({"role": "assistant", "content": _flatten_text(message["parts"])})
            continue
        content: list[dict[str, Any]] = []
        for part in message["parts"]:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            else:
                content.append({"type": "image_url", "image_url": {
                    "url": f"data:{part.media_type};base64,{_b64(part.data)}"}})
        messages.append({"role": message["role"], "content": content})
    payload: dict[str, Any] = {
        "model": config.model_name,
        "messages": messages,
        "temperature": call.temperature,
    }
    if call.seed is not None:
        payload["seed"] = call.seed
    if call.schema is not None:
        payload["response_format"] = {
            "type": "json_schema",
            "json_schema": {"name": call.purpose_tag, "strict": True, "schema": call.schema},
        }
    return payload


def parse_openai_response(body: dict[str, Any]) -> str:
    return body["choices"][0]["message"]["content"]


def build_gemini_payload(call: ProviderCall, config: ProviderConfig) -> dict[str, Any]:
    contents: list[dict[str, Any]] = []
    for message in call.messages:
        parts: list[dict[str, Any]] = []
        for part in message["parts"]:
            if isinstance(part, TextPart):
                parts.append({"text": part.text})
            else:
                parts.append({"inline_data": {
                    "mime_type": part.media_type, "data": _b64(part.data)}})
        role = "model" if message["role"] == "assistant" else "user"
        contents.append({"role": role, "parts": parts})
    payload: dict[str, Any] = {
        "contents": contents,
        "generationConfig": {"temperature": call.temperature},
    }
    if call.system_prompt:
        payload["systemInstruction"] = {"parts": [{"text": call.system_prompt}]}
    return payload


def parse_gemini_response(body: dict[str, Any]) -> str:
    parts = body["candidates"][0]["content"]["parts"]
    return "".join(p.get("text", "") for p in parts)


def build_mistral_payload(call: ProviderCall, config: ProviderConfig) -> dict[str, Any]:
    payload = build_openai_payload(call, config)
    # Mistral-style chat has no schema enforcement channel; ask for JSON only.
    payload.pop("response_format", None)
    payload.pop("seed", None)
    payload["response_format"] = {"type": "json_object"}
    return payload


_DEFAULT_BASE_URLS = {
    "openai-like": "https://api.openai.com/v1",
    "gemini-like": "https://generativelanguage.googleapis.com/v1beta",
    "mistral-like": "https://api.mistral.ai/v1",
}


class HttpProvider:
    """Thin HTTPS adapter for the three supported wire shapes."""

    def __init__(self, config: ProviderConfig):
        self.config = config

    def _api_key(self) -> str:
        ref = self.config.api_key_ref or DEFAULT_KEY_VARS.get(self.config.kind, "")
        key = os.environ.get(ref, "") if ref else ""
        if not key:
            raise AuthenticationError(
                f"API key environment variable {ref or '<unset>'} is empty",
                provider_id=self.config.provider_id, purpose_tag="<startup>")
        return key

    def _endpoint_and_headers(self, call: ProviderCall) -> tuple[str, dict[str, str]]:
        base = (self.config.base_url or _DEFAULT_BASE_URLS[self.config.kind]).rstrip("/")
        key = self._api_key()
        if self.config.kind == "gemini-like":
            url = f"{base}/models/{self.config.model_name}:generateContent"
            return url, {"x-goog-api-key": key}
        return f"{base}/chat/completions", {"Authorization": f"Bearer {key}"}

    def complete(self, call: ProviderCall) -> str:
        import httpx

        if self.config.kind == "gemini-like":
            payload = build_gemini_payload(call, self.config)
        elif self.config.kind == "mistral-like":
            payload = build_mistral_payload(call, self.config)
        else:
            payload = build_openai_payload(call, self.config)
        url, headers = self._endpoint_and_headers(call)
        try:
            response = httpx.post(url, json=payload, headers=headers,
                                  timeout=self.config.timeout)
        except httpx.TimeoutException as exc:
            raise GatewayTimeoutError(
                f"request timed out after {self.config.timeout}s",
                provider_id=self.config.provider_id,
                purpose_tag=call.purpose_tag) from exc
        except httpx.HTTPError as exc:
            raise TransportError(
                f"transport failure: {type(exc).__name__}",
                provider_id=self.config.provider_id,
                purpose_tag=call.purpose_tag) from exc
        if response.status_code in (401, 403):
            raise AuthenticationError(
                f"authentication rejected (HTTP {response.status_code})",
                provider_id=self.config.provider_id, purpose_tag=call.purpose_tag)
        if response.status_code >= 400:
            raise TransportError(
                f"provider returned HTTP {response.status_code}",
                provider_id=self.config.provider_id, purpose_tag=call.purpose_tag)
        body = response.json()
        if self.config.kind == "gemini-like":
            return parse_gemini_response(body)
        return parse_openai_response(body)


def make_provider(config: ProviderConfig):
    if config.kind == "mock":
        return MockProvider(config)
    if config.kind in _DEFAULT_BASE_URLS:
        return HttpProvider(config)
    raise ValueError(f"unknown provider kind {config.kind!r}")


# ---------------------------------------------------------------------------
# Gateway
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"^```(?:json)?\s*(.*?)\s*```\s*$", re.DOTALL)


def _parse_json_text(raw: str) -> Any:
    text = raw.strip()
    match = _FENCE_RE.match(text)
    if match:
        text = match.group(1)
    return json.loads(text)


class LlmGateway:
    """Routes structured requests to configured providers.

    Shareable across threads; concurrent calls are bounded by
    ``max_in_flight``.
    """

    def __init__(self, providers: list[Any], *, max_in_flight: int = DEFAULT_MAX_IN_FLIGHT):
        self._providers: dict[str, Any] = {}
        for provider in providers:
            pid = provider.config.provider_id
            if pid in self._providers:
                raise ValueError(f"duplicate provider_id {pid!r}")
            self._providers[pid] = provider
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._validators: dict[str, jsonschema.Draft202012Validator] = {}
        self._validator_lock = threading.Lock()

    @property
    def configs(self) -> list[ProviderConfig]:
        return [p.config for p in self._providers.values()]

    def provider(self, provider_id: str):
        return self._providers[provider_id]

    def enabled_configs(self, *, vision_only: bool = False) -> list[ProviderConfig]:
        configs = [c for c in self.configs if c.enabled]
        if vision_only:
            configs = [c for c in configs if c.capabilities.vision]
        return configs

    def _validator_for(self, schema: dict[str, Any]) -> jsonschema.Draft202012Validator:
        key = json.dumps(schema, sort_keys=True)
        with self._validator_lock:
            validator = self._validators.get(key)
            if validator is None:
                validator = jsonschema.Draft202012Validator(schema)
                self._validators[key] = validator
                if len(self._validators) > 512:
                    self._validators.pop(next(iter(self._validators)))
        return validator

    def _resolve_provider(self, request: StructuredRequest):
        needs_vision = request.has_image()
        candidates = self.enabled_configs(vision_only=needs_vision)
        if needs_vision and not candidates:
            raise NoVisionProviderError(
                "no enabled provider has vision capability "
                f"(purpose={request.purpose_tag})")
        if needs_vision and request.provider_selector.mode == "fixed":
            wanted = request.provider_selector.provider_id
            if wanted not in {c.provider_id for c in candidates}:
                raise NoVisionProviderError(
                    f"provider {wanted!r} lacks vision capability "
                    f"(purpose={request.purpose_tag})")
        provider_id = select_provider(request.provider_selector, candidates,
                                      seed=request.seed)
        return self._providers[provider_id]

    def complete_structured(self, request: StructuredRequest) -> StructuredResponse:
        """Complete a request, guaranteeing a schema-valid document.

        Raises SchemaViolationError when validation still fails after the
        provider's retry budget; transport and auth errors propagate with
        provider_id and purpose_tag attached.
        """
        provider = self._resolve_provider(request)
        config: ProviderConfig = provider.config
        validator = self._validator_for(request.response_schema)
        native = config.capabilities.native_structured_output

        messages: list[dict[str, Any]] = [{"role": "user", "parts": list(request.user_parts)}]
        if not native:
            messages[0]["parts"].append(TextPart(
                "Respond with a single JSON document, and nothing else, conforming "
                "to this JSON Schema:\n" + json.dumps(request.response_schema, indent=2)))

        raw = ""
        for attempt in range(1, config.max_retries + 1):
            call = ProviderCall(
                purpose_tag=request.purpose_tag,
                system_prompt=request.system_prompt,
                messages=messages,
                schema=request.response_schema if native else None,
                response_schema=request.response_schema,
                temperature=request.temperature,
                seed=request.seed,
            )
            with self._slots:
                raw = provider.complete(call)
            try:
                document = _parse_json_text(raw)
                validator.validate(document)
            except (json.JSONDecodeError, jsonschema.ValidationError) as exc:
                problem = (f"invalid JSON: {exc}" if isinstance(exc, json.JSONDecodeError)
                           else f"schema violation: {exc.message}")
                logger.debug("attempt %d/%d for %s on %s failed: %s",
                             attempt, config.max_retries, request.purpose_tag,
                             config.provider_id, problem)
                messages = messages + [
                    {"role": "assistant", "parts": [TextPart(raw)]},
                    {"role": "user", "parts": [TextPart(
                        f"The previous reply was rejected ({problem}). Respond again "
                        "with a single JSON document conforming exactly to the schema.")]},
                ]
                continue
            return StructuredResponse(
                document=document,
                provider_id=config.provider_id,
                attempts=attempt,
                raw_text=raw,
            )
        raise SchemaViolationError(
            f"output violated the response schema on all {config.max_retries} attempts",
            provider_id=config.provider_id,
            purpose_tag=request.purpose_tag,
            attempts=config.max_retries,
            raw_text=raw,
        )


def default_provider_configs(env: dict[str, str] | None = None) -> list[ProviderConfig]:
    """Build provider configs from the environment.

    A deterministic mock provider is always present (and is the only enabled
    provider when no API keys are set), so the tool works fully offline.
    """
    env = os.environ if env is None else env
    configs = [ProviderConfig(
        provider_id="mock", kind="mock", model_name="mock-1",
        capabilities=ProviderCapabilities(vision=True, native_structured_output=False),
    )]
    if env.get("OPENAI_API_KEY"):
        configs.append(ProviderConfig(
            provider_id="openai", kind="openai-like", model_name="gpt-4o-mini",
            api_key_ref="OPENAI_API_KEY",
            capabilities=ProviderCapabilities(vision=True, native_structured_output=True)))
    if env.get("GOOGLE_API_KEY"):
        configs.append(ProviderConfig(
            provider_id="gemini", kind="gemini-like", model_name="gemini-1.5-flash",
            api_key_ref="GOOGLE_API_KEY",
            capabilities=ProviderCapabilities(vision=True, native_structured_output=False)))
    if env.get("MISTRAL_API_KEY"):
        configs.append(ProviderConfig(
            provider_id="mistral", kind="mistral-like", model_name="mistral-small-latest",
            api_key_ref="MISTRAL_API_KEY",
            capabilities=ProviderCapabilities(vision=False, native_structured_output=False)))
    return configs
