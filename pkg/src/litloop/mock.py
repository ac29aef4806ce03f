"""Scripted provider for deterministic tests and offline runs.

A :class:`MockScript` is an ordered list of rules. A request matches the first
rule whose ``template_id`` equals the request's and whose ``match`` entries are
all satisfied: each matcher value must occur as a substring of the same-named
request variable. Each rule serves its responses in order; once exhausted it
repeats the last one (unless ``repeat_last`` is off, in which case the rule
stops matching). Malformed replies are scripted simply by listing them before
the valid one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .gateway import GatewayError, ProviderTimeoutError, TaskRequest

TIMEOUT = "__TIMEOUT__"


class UnmatchedRequestError(GatewayError):
    def __init__(self, template_id: str):
        super().__init__(f"no mock rule matches template {template_id!r}")
        self.template_id = template_id


@dataclass
class MockRule:
    template_id: str
    responses: tuple[str, ...]
    match: Mapping[str, str] | None = None
    repeat_last: bool = True
    _cursor: int = field(default=0, repr=False, compare=False)

    def __post_init__(self):
        if not self.responses:
            raise ValueError(f"rule for {self.template_id!r} has no responses")
        self.responses = tuple(self.responses)

    def matches(self, request: TaskRequest) -> bool:
        if request.template_id != self.template_id:
            return False
        if not self.repeat_last and self._cursor >= len(self.responses):
            return False
        if self.match:
            for key, needle in self.match.items():
                value = request.variables.get(key)
                if value is None or needle not in str(value):
                    return False
        return True

    def next_response(self) -> str:
        index = min(self._cursor, len(self.responses) - 1)
        self._cursor += 1
        return self.responses[index]


@dataclass
class MockScript:
    rules: list[MockRule] = field(default_factory=list)

    def add(
        self,
        template_id: str,
        *responses: str,
        match: Mapping[str, str] | None = None,
        repeat_last: bool = True,
    ) -> "MockScript":
        self.rules.append(
            MockRule(
                template_id=template_id,
                responses=tuple(responses),
                match=dict(match) if match else None,
                repeat_last=repeat_last,
            )
        )
        return self

    def reply(self, template_id: str, *payloads, match=None, repeat_last=True):
        """Like ``add`` but serializes each payload to JSON first."""
        return self.add(
            template_id,
            *(json.dumps(p, sort_keys=True) for p in payloads),
            match=match,
            repeat_last=repeat_last,
        )

    @classmethod
    def from_json(cls, data: list[dict]) -> "MockScript":
        script = cls()
        for entry in data:
            responses = [
                r if isinstance(r, str) else json.dumps(r, sort_keys=True)
                for r in entry["responses"]
            ]
            script.add(
                entry["template_id"],
                *responses,
                match=entry.get("match"),
                repeat_last=entry.get("repeat_last", True),
            )
        return script

    @classmethod
    def from_file(cls, path: str | Path) -> "MockScript":
        with Path(path).open(encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


class MockProvider:
    """Provider that answers from a script and never touches the network."""

    tag = "mock"

    def __init__(self, script: MockScript):
        self.script = script
        self.call_count = 0

    def complete(self, request: TaskRequest, prompt: str) -> str:
        self.call_count += 1
        for rule in self.script.rules:
            if rule.matches(request):
                response = rule.next_response()
                if response == TIMEOUT:
                    raise ProviderTimeoutError(
                        f"scripted timeout for {request.template_id}"
                    )
                return response
        raise UnmatchedRequestError(request.template_id)
