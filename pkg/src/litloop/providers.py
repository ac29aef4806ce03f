"""HTTP-backed model providers for the gateway.

Only OpenAI-compatible chat endpoints are supported, which covers most
hosted and self-hosted servers. The mock provider used in tests and
recorded runs lives in mock.py.
"""

from __future__ import annotations

import os

import httpx

from .gateway import GatewayError, ProviderTimeoutError, TaskRequest

DEFAULT_KEY_ENV = "LITLOOP_API_KEY"


class OpenAIProvider:
    """Minimal chat-completions client.

    The prompt travels as a single user message; the reply text is returned
    as-is and schema validation happens in the gateway.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = DEFAULT_KEY_ENV,
        timeout: float = 120.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.tag = f"openai:{model}"
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(timeout=timeout, headers=headers)

    def complete(self, request: TaskRequest, prompt: str) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": request.temperature,
        }
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions", json=body
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeoutError(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise GatewayError(f"provider request failed: {exc}") from exc
        if response.status_code != 200:
            raise GatewayError(
                f"provider returned {response.status_code}: {response.text[:200]}"
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise GatewayError(f"malformed provider response: {exc}") from exc
