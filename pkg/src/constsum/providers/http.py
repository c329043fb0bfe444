"""Chat-completions HTTP provider.

The transport (a callable taking the request body and returning a status
code and decoded payload) is injectable so tests never open sockets; the
default transport posts JSON with the API key as a bearer token.
"""

from __future__ import annotations

import time
from typing import Callable

from .base import (
    ChatProvider,
    ChatRequest,
    ChatResponse,
    ContextLengthError,
    ProviderError,
    RateLimitError,
    TransportError,
    estimate_tokens,
)
from .pricing import CostLedger
from .retry import with_retries

Transport = Callable[[dict], tuple[int, dict]]


def requests_transport(endpoint: str, api_key: str | None, timeout: float = 60.0) -> Transport:
    import requests

    session = requests.Session()
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    def send(body: dict) -> tuple[int, dict]:
        try:
            resp = session.post(endpoint, json=body, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        try:
            payload = resp.json()
        except ValueError:
            payload = {"raw": resp.text}
        return resp.status_code, payload

    return send


class HttpChatProvider(ChatProvider):
    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        ledger: CostLedger | None = None,
        transport: Transport | None = None,
        attempts: int = 3,
        base_delay: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
        timeout: float = 60.0,
    ):
        self.ledger = ledger
        self._attempts = attempts
        self._base_delay = base_delay
        self._sleep = sleep
        self._transport = transport or requests_transport(endpoint, api_key, timeout)

    def chat(self, request: ChatRequest) -> ChatResponse:
        body = {
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system_role},
                {"role": "user", "content": request.user_content},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }

        def attempt() -> ChatResponse:
            status, payload = self._transport(body)
            if status == 429:
                raise RateLimitError(f"rate limited: {payload}")
            if status >= 500:
                raise TransportError(f"server error {status}: {payload}")
            if status >= 400:
                message = ""
                if isinstance(payload, dict):
                    error = payload.get("error") or {}
                    message = f"{error.get('code', '')} {error.get('message', '')}".strip()
                if "context_length" in message or "context length" in message \
                        or "maximum context" in message:
                    raise ContextLengthError(message or f"status {status}")
                raise ProviderError(f"request failed ({status}): {message or payload}")
            return self._parse(payload)

        response = with_retries(
            attempt, attempts=self._attempts, base_delay=self._base_delay,
            sleep=self._sleep)
        if self.ledger is not None:
            self.ledger.add(request.model, response.prompt_tokens,
                            response.completion_tokens)
        return response

    @staticmethod
    def _parse(payload: dict) -> ChatResponse:
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion payload: {payload}") from exc
        if text is None:
            raise ProviderError("completion payload carries a null message")
        usage = payload.get("usage") or {}
        return ChatResponse(
            text=text,
            prompt_tokens=usage.get("prompt_tokens", estimate_tokens(text)),
            completion_tokens=usage.get("completion_tokens", estimate_tokens(text)),
        )
