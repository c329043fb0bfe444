"""Chat transcript recording and replay.

A transcript is a JSONL file: one record per chat call carrying the request
digest, the full request, and the full response. Replaying feeds the stored
responses back while verifying that the requests issued now are the ones
that were recorded — any prompt drift surfaces as an immediate error, and
each record is consumed exactly once.
"""

from __future__ import annotations

import json
from collections import deque
from pathlib import Path

from .base import ChatProvider, ChatRequest, ChatResponse, ProviderError
from .mocks import request_digest


class TranscriptMismatchError(ProviderError):
    """A replayed request has no unconsumed record in the transcript."""


class TranscriptRecorder(ChatProvider):
    """Wraps a provider and appends every call to a JSONL transcript."""

    def __init__(self, inner: ChatProvider, path: str | Path):
        self.inner = inner
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8")

    def chat(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.chat(request)
        record = {
            "op": "chat",
            "digest": request_digest(request),
            "request": {
                "model": request.model,
                "system_role": request.system_role,
                "user_content": request.user_content,
                "temperature": request.temperature,
                "max_output_tokens": request.max_output_tokens,
            },
            "response": {
                "text": response.text,
                "prompt_tokens": response.prompt_tokens,
                "completion_tokens": response.completion_tokens,
            },
        }
        self._fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        self._fh.flush()
        return response

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "TranscriptRecorder":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class TranscriptReplayer(ChatProvider):
    """Serves recorded responses; performs no network or model activity."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: dict[str, deque] = {}
        self._total = 0
        for lineno, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("op") != "chat":
                raise TranscriptMismatchError(
                    f"{self.path}:{lineno}: unsupported op {record.get('op')!r}")
            self._records.setdefault(record["digest"], deque()).append(record)
            self._total += 1
        self.consumed = 0

    def chat(self, request: ChatRequest) -> ChatResponse:
        digest = request_digest(request)
        queue = self._records.get(digest)
        if not queue:
            raise TranscriptMismatchError(
                f"no unconsumed transcript record for this request "
                f"(model={request.model!r}, content starts "
                f"{request.user_content[:80]!r}); the prompts have drifted "
                f"from the recorded run or the transcript is exhausted")
        record = queue.popleft()
        stored = record["request"]
        for field in ("model", "system_role", "user_content", "temperature"):
            got = getattr(request, field)
            if stored[field] != got:
                raise TranscriptMismatchError(
                    f"transcript request field {field!r} differs: "
                    f"recorded {stored[field]!r}, replayed {got!r}")
        self.consumed += 1
        resp = record["response"]
        return ChatResponse(
            text=resp["text"],
            prompt_tokens=resp["prompt_tokens"],
            completion_tokens=resp["completion_tokens"],
        )

    def assert_fully_consumed(self) -> None:
        if self.consumed != self._total:
            raise TranscriptMismatchError(
                f"transcript has {self._total - self.consumed} unconsumed "
                f"records of {self._total}")
