"""Provider interfaces and shared request/response types."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class ProviderError(Exception):
    """Base class for provider failures."""


class TransportError(ProviderError):
    """Network-level failure or 5xx response; retryable."""


class RateLimitError(ProviderError):
    """Rate-limit signal from the endpoint; retryable after backoff."""


class ContextLengthError(ProviderError):
    """Request exceeded the model's context window; caller may switch tier."""


class BudgetExceededError(ProviderError):
    """Masked-LM token budget exceeded; caller must truncate its input."""


class ScriptMissError(ProviderError):
    """A scripted provider received a request it has no fixture for."""


class ParseError(ValueError):
    """A model response did not contain the expected structure."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class ChatRequest:
    model: str
    system_role: str
    user_content: str
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError("temperature must be in [0, 2]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be >= 0")


@dataclass(frozen=True)
class MaskedSequence:
    tokens: tuple[str, ...]
    mask_positions: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError("tokens must be non-empty")
        if list(self.mask_positions) != sorted(set(self.mask_positions)):
            raise ValueError("mask_positions must be strictly increasing")
        if self.mask_positions and not (
            0 <= self.mask_positions[0] and self.mask_positions[-1] < len(self.tokens)
        ):
            raise ValueError("mask_positions out of range")


@dataclass
class ChatCallRecord:
    request: ChatRequest
    response: ChatResponse


def estimate_tokens(text: str) -> int:
    """Crude token estimate (4 characters per token) for budgeting."""
    return math.ceil(len(text) / 4)


class ChatProvider:
    """Interface: chat(request) -> ChatResponse."""

    def chat(self, request: ChatRequest) -> ChatResponse:
        raise NotImplementedError


class Embedder:
    """Interface: embed(texts) -> list of unit-norm vectors."""

    dimension: int

    def embed(self, texts: list[str]) -> list:
        raise NotImplementedError


class MaskedLM:
    """Interface: tokenize + fill_mask with a hard token budget."""

    token_limit: int = 512

    def tokenize(self, text: str) -> list[str]:
        raise NotImplementedError

    def fill_mask(self, seq: MaskedSequence, context: str) -> list[str]:
        raise NotImplementedError


@dataclass
class RequestLog:
    """Shared recorder mixin state for providers used in tests."""

    requests: list[ChatRequest] = field(default_factory=list)
