"""Single choke point for model calls.

Every model-facing operation builds a :class:`TaskRequest` and hands it to
:meth:`Gateway.execute`. The gateway routes by task class, renders the prompt,
validates the reply against the template's response schema, retries bounded
self-repair on malformed output, and appends one audit record per provider
call. Nothing unvalidated ever leaves this module.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Protocol

from . import prompts, schemas

log = logging.getLogger(__name__)

DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_TEMPERATURE = 0.7

_REPAIR_SUFFIX = (
    "\n\nYour previous reply was not acceptable.\n"
    "Previous reply:\n{raw}\n"
    "Problem: {error}\n"
    "Return ONLY a corrected JSON object."
)


class TaskClass(str, Enum):
    STRUCTURED = "structured"
    REASONING = "reasoning"
    LONG_CONTEXT = "long_context"


class GatewayError(Exception):
    """Base class for gateway failures."""


class ConfigurationError(GatewayError):
    """Routing or registry misconfiguration detected before any call."""


class InvalidRequestError(GatewayError):
    """The request itself is malformed (bad template, variables, temperature)."""


class ProviderTimeoutError(GatewayError):
    """The provider did not answer in time. Propagated without retry."""


class RetryExhaustedError(GatewayError):
    """Every attempt produced schema-invalid output.

    ``raw_attempts`` holds each raw reply in order, so callers can log or
    surface them.
    """

    def __init__(self, template_id: str, raw_attempts: list[str], last_error: str):
        super().__init__(
            f"{template_id}: no schema-valid reply after "
            f"{len(raw_attempts)} attempts: {last_error}"
        )
        self.template_id = template_id
        self.raw_attempts = raw_attempts
        self.last_error = last_error


@dataclass(frozen=True)
class TaskRequest:
    task_class: TaskClass
    template_id: str
    variables: Mapping[str, str]
    schema_id: str
    temperature: float = DEFAULT_TEMPERATURE

    @classmethod
    def for_template(
        cls,
        template_id: str,
        variables: Mapping[str, str],
        temperature: float = DEFAULT_TEMPERATURE,
    ) -> "TaskRequest":
        """Build a request using the template's registered task class.

        The response schema shares the template's id; there is exactly one
        schema per template.
        """
        if template_id not in prompts.TEMPLATES:
            raise InvalidRequestError(f"unknown template {template_id!r}")
        return cls(
            task_class=TaskClass(prompts.task_class_for(template_id)),
            template_id=template_id,
            variables=dict(variables),
            schema_id=template_id,
            temperature=temperature,
        )


@dataclass(frozen=True)
class TaskResponse:
    parsed: Any
    raw: str
    attempts: int
    provider_tag: str


class Provider(Protocol):
    """A model backend. ``tag`` identifies the binding in audit records."""

    tag: str

    def complete(self, request: TaskRequest, prompt: str) -> str:
        """Return the raw model reply for a rendered prompt."""
        ...


def _validate_request(request: TaskRequest) -> None:
    if not isinstance(request.task_class, TaskClass):
        raise InvalidRequestError(f"unknown task class {request.task_class!r}")
    if request.template_id not in prompts.TEMPLATES:
        raise InvalidRequestError(f"unknown template {request.template_id!r}")
    if request.schema_id not in schemas.SCHEMAS:
        raise InvalidRequestError(f"unknown schema {request.schema_id!r}")
    missing = prompts.placeholders(request.template_id) - set(request.variables)
    if missing:
        raise InvalidRequestError(
            f"{request.template_id}: missing variables {sorted(missing)}"
        )
    if not 0.0 <= request.temperature <= 1.0:
        raise InvalidRequestError(
            f"temperature {request.temperature} outside [0, 1]"
        )


@dataclass
class _Binding:
    name: str
    provider: Provider


class Gateway:
    """Routes tasks to providers and enforces the response contract.

    ``bindings`` maps binding names to providers; ``routing`` maps each task
    class to a binding name. ``min_interval`` (seconds) is a per-binding
    request-rate floor; zero disables it, which every deterministic test
    relies on.
    """

    def __init__(
        self,
        bindings: Mapping[str, Provider],
        routing: Mapping[TaskClass, str],
        *,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        audit_path: str | Path | None = None,
        min_interval: float = 0.0,
    ):
        if max_attempts < 1:
            raise ConfigurationError("max_attempts must be at least 1")
        self._bindings = dict(bindings)
        self._routing = {TaskClass(k): v for k, v in routing.items()}
        for task_class, name in self._routing.items():
            if name not in self._bindings:
                raise ConfigurationError(
                    f"routing for {task_class.value} names unknown binding {name!r}"
                )
        self.max_attempts = max_attempts
        self.audit_log: list[dict] = []
        self._audit_path = Path(audit_path) if audit_path else None
        self._min_interval = min_interval
        self._last_call: dict[str, float] = {}
        self._lock = threading.Lock()

    # -- routing -----------------------------------------------------------

    def route(self, request: TaskRequest) -> _Binding:
        _validate_request(request)
        name = self._routing.get(request.task_class)
        if name is None:
            raise ConfigurationError(
                f"no binding configured for task class {request.task_class.value!r}"
            )
        return _Binding(name=name, provider=self._bindings[name])

    # -- execution ---------------------------------------------------------

    def execute(self, request: TaskRequest) -> TaskResponse:
        binding = self.route(request)
        prompt = prompts.render(request.template_id, dict(request.variables))
        raw_attempts: list[str] = []
        last_error = ""
        for attempt in range(1, self.max_attempts + 1):
            self._throttle(binding.name)
            try:
                raw = binding.provider.complete(request, prompt)
            except ProviderTimeoutError as exc:
                self._audit(request, binding, attempt, "timeout", str(exc))
                raise
            raw_attempts.append(raw)
            try:
                parsed = schemas.parse_response(request.schema_id, raw)
            except schemas.ResponseFormatError as exc:
                last_error = str(exc)
                self._audit(request, binding, attempt, "schema_error", last_error)
                log.warning(
                    "%s attempt %d rejected: %s", request.template_id, attempt, exc
                )
                prompt = prompts.render(request.template_id, dict(request.variables))
                prompt += _REPAIR_SUFFIX.format(raw=raw, error=last_error)
                continue
            self._audit(request, binding, attempt, "ok", None)
            return TaskResponse(
                parsed=parsed,
                raw=raw,
                attempts=attempt,
                provider_tag=binding.name,
            )
        raise RetryExhaustedError(request.template_id, raw_attempts, last_error)

    # -- internals ---------------------------------------------------------

    def _throttle(self, binding_name: str) -> None:
        if self._min_interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            last = self._last_call.get(binding_name)
            wait = 0.0 if last is None else self._min_interval - (now - last)
            if wait > 0:
                time.sleep(wait)
                now = time.monotonic()
            self._last_call[binding_name] = now

    def _audit(
        self,
        request: TaskRequest,
        binding: _Binding,
        attempt: int,
        outcome: str,
        error: str | None,
    ) -> None:
        record = {
            "seq": len(self.audit_log),
            "template_id": request.template_id,
            "task_class": request.task_class.value,
            "binding": binding.name,
            "attempt": attempt,
            "outcome": outcome,
        }
        if error is not None:
            record["error"] = error
        with self._lock:
            self.audit_log.append(record)
            if self._audit_path is not None:
                with self._audit_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")


def register_mock(script, **kwargs) -> Gateway:
    """Build a gateway whose every task class resolves against ``script``.

    No network activity is possible through the returned gateway.
    """
    from .mock import MockProvider

    provider = MockProvider(script)
    bindings = {"mock": provider}
    routing = {task_class: "mock" for task_class in TaskClass}
    return Gateway(bindings, routing, **kwargs)
