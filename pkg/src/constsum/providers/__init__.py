"""Provider interfaces, mocks, HTTP clients, pricing, and transcripts."""

from .base import (
    BudgetExceededError,
    ChatProvider,
    ChatRequest,
    ChatResponse,
    ContextLengthError,
    Embedder,
    MaskedLM,
    MaskedSequence,
    ParseError,
    ProviderError,
    RateLimitError,
    ScriptMissError,
    TransportError,
    estimate_tokens,
)
from .http import HttpChatProvider
from .mocks import (
    HashEmbedder,
    MockMaskedLM,
    ScriptedChatProvider,
    SyntheticChatProvider,
    request_digest,
)
from .pricing import DEFAULT_PRICING, CostLedger, LedgerEntry, ModelPrice, pricing_from_config
from .retry import with_retries
from .sidecar_client import SidecarClient, SidecarError
from .transcript import TranscriptMismatchError, TranscriptRecorder, TranscriptReplayer

__all__ = [
    "BudgetExceededError",
    "ChatProvider",
    "ChatRequest",
    "ChatResponse",
    "ContextLengthError",
    "CostLedger",
    "DEFAULT_PRICING",
    "Embedder",
    "HashEmbedder",
    "HttpChatProvider",
    "LedgerEntry",
    "MaskedLM",
    "MaskedSequence",
    "MockMaskedLM",
    "ModelPrice",
    "ParseError",
    "ProviderError",
    "RateLimitError",
    "ScriptMissError",
    "ScriptedChatProvider",
    "SidecarClient",
    "SidecarError",
    "SyntheticChatProvider",
    "TranscriptMismatchError",
    "TranscriptRecorder",
    "TranscriptReplayer",
    "TransportError",
    "estimate_tokens",
    "pricing_from_config",
    "with_retries",
]
