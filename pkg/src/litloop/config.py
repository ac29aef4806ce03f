"""Runtime configuration and wiring.

A single JSON file configures model providers, task-class routing, the
scholarly backend, and operational limits. Credentials never appear in the
file; providers read them from named environment variables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .backends import HttpBackend, InMemoryBackend, ScholarlyBackend
from .gateway import Gateway, TaskClass
from .mock import MockProvider, MockScript

DEFAULT_ROUTING = {tc.value: "primary" for tc in TaskClass}


class ConfigError(Exception):
    pass


@dataclass
class AppConfig:
    corpus_cap: int = 50
    max_attempts: int = 3
    temperature: float = 0.7
    min_interval: float = 0.0
    allow_add_paper: bool = True
    cache_dir: str | None = None
    data_dir: str | None = None
    audit_path: str | None = None
    routing: dict = field(default_factory=lambda: dict(DEFAULT_ROUTING))
    providers: dict = field(default_factory=dict)
    backend: dict = field(default_factory=lambda: {"kind": "http"})

    @staticmethod
    def from_file(path: str | Path) -> "AppConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        known = {f.name for f in fields(AppConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return AppConfig(**data)


def build_backend(
    config: AppConfig, recorded_path: str | None = None
) -> ScholarlyBackend:
    """The scholarly backend: live HTTP, or a recorded fixture for replays."""
    if recorded_path:
        return InMemoryBackend.from_file(recorded_path)
    kind = config.backend.get("kind", "http")
    if kind == "recorded":
        try:
            return InMemoryBackend.from_file(config.backend["path"])
        except KeyError:
            raise ConfigError("recorded backend needs a 'path'") from None
    if kind == "http":
        return HttpBackend(
            base_url=config.backend.get("base_url"),
            timeout=config.backend.get("timeout", 30.0),
        )
    raise ConfigError(f"unknown backend kind: {kind!r}")


def _build_provider(name: str, spec: dict):
    kind = spec.get("kind", "openai")
    if kind == "mock":
        try:
            return MockProvider(MockScript.from_file(spec["script"]))
        except KeyError:
            raise ConfigError(f"mock provider {name!r} needs a 'script' path") from None
    if kind == "openai":
        from .providers import DEFAULT_KEY_ENV, OpenAIProvider

        missing = {"base_url", "model"} - set(spec)
        if missing:
            raise ConfigError(f"provider {name!r} is missing {sorted(missing)}")
        return OpenAIProvider(
            base_url=spec["base_url"],
            model=spec["model"],
            api_key_env=spec.get("api_key_env", DEFAULT_KEY_ENV),
            timeout=spec.get("timeout", 120.0),
        )
    raise ConfigError(f"unknown provider kind for {name!r}: {kind!r}")


def build_gateway(config: AppConfig, mock_script_path: str | None = None) -> Gateway:
    """Assemble the gateway. A mock script path overrides all providers."""
    if mock_script_path:
        provider = MockProvider(MockScript.from_file(mock_script_path))
        bindings = {"mock": provider}
        routing = {tc.value: "mock" for tc in TaskClass}
    else:
        bindings = {
            name: _build_provider(name, spec)
            for name, spec in config.providers.items()
        }
        if not bindings:
            raise ConfigError(
                "no providers configured; define providers in the config file "
                "or pass a mock script"
            )
        routing = dict(config.routing)
    return Gateway(
        bindings,
        routing,
        max_attempts=config.max_attempts,
        min_interval=config.min_interval,
        audit_path=config.audit_path,
    )
