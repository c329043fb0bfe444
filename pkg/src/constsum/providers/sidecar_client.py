"""Client for the model-inference sidecar service.

Protocol: JSON over HTTP under /v1/, every response an envelope carrying
exactly one of `result` or `error`. The client re-normalizes embedding
vectors on receipt and maps budget errors onto BudgetExceededError so the
masked-LM interface behaves identically to the in-process mock.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .base import (
    BudgetExceededError,
    Embedder,
    MaskedLM,
    MaskedSequence,
    ProviderError,
    TransportError,
)

Transport = Callable[[str, dict], tuple[int, dict]]


class SidecarError(ProviderError):
    """The sidecar reported a request-level failure."""


def requests_transport(base_url: str, timeout: float = 120.0) -> Transport:
    import requests

    session = requests.Session()

    def send(path: str, body: dict) -> tuple[int, dict]:
        try:
            resp = session.post(base_url.rstrip("/") + path, json=body, timeout=timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        try:
            payload = resp.json()
        except ValueError:
            payload = {"raw": resp.text}
        return resp.status_code, payload

    return send


class SidecarClient(Embedder, MaskedLM):
    def __init__(
        self,
        base_url: str = "http://127.0.0.1:8801",
        transport: Transport | None = None,
        token_limit: int = 512,
        timeout: float = 120.0,
    ):
        self.base_url = base_url
        self.token_limit = token_limit
        self._transport = transport or requests_transport(base_url, timeout)
        self._dimension: int | None = None

    def _call(self, path: str, body: dict) -> dict:
        status, payload = self._transport(path, body)
        if not isinstance(payload, dict) or ("result" not in payload and "error" not in payload):
            raise SidecarError(f"{path}: malformed envelope ({status}): {payload}")
        error = payload.get("error")
        result = payload.get("result")
        if error:
            if result is not None:
                raise SidecarError(f"{path}: envelope carries both result and error")
            if "budget" in str(error) or "limit" in str(error):
                raise BudgetExceededError(str(error))
            raise SidecarError(f"{path}: {error}")
        if status != 200:
            raise SidecarError(f"{path}: status {status} without error field")
        if result is None:
            raise SidecarError(f"{path}: envelope carries neither result nor error")
        return result

    @property
    def dimension(self) -> int:
        if self._dimension is None:
            self._dimension = len(self.embed(["probe"])[0])
        return self._dimension

    @dimension.setter
    def dimension(self, value: int) -> None:
        self._dimension = value

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            raise ValueError("embed needs at least one text")
        result = self._call("/v1/embed", {"texts": list(texts)})
        vectors = [np.asarray(v, dtype=float) for v in result["vectors"]]
        if len(vectors) != len(texts):
            raise SidecarError(
                f"/v1/embed returned {len(vectors)} vectors for {len(texts)} texts")
        out = []
        for vec in vectors:
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise SidecarError("/v1/embed returned a zero vector")
            out.append(vec / norm)
        return out

    def tokenize(self, text: str) -> list[str]:
        result = self._call("/v1/tokenize", {"text": text})
        return list(result["tokens"])

    def fill_mask(self, seq: MaskedSequence, context: str) -> list[str]:
        result = self._call(
            "/v1/fill_mask",
            {
                "tokens": list(seq.tokens),
                "mask_positions": list(seq.mask_positions),
                "context": context,
            },
        )
        predictions = list(result["predictions"])
        if len(predictions) != len(seq.mask_positions):
            raise SidecarError(
                f"/v1/fill_mask returned {len(predictions)} predictions for "
                f"{len(seq.mask_positions)} positions")
        return predictions

    def blanc_tune(self, document: str, summary: str, overrides: dict | None = None) -> float:
        body = {"document": document, "summary": summary}
        if overrides:
            body["overrides"] = overrides
        result = self._call("/v1/blanc_tune", body)
        score = float(result["score"])
        if not (-1.0 <= score <= 1.0):
            raise SidecarError(f"/v1/blanc_tune score {score} outside [-1, 1]")
        return score

    def project(self, vectors: list) -> list[tuple[float, float]]:
        result = self._call(
            "/v1/project", {"vectors": [list(map(float, v)) for v in vectors]})
        coords = [(float(x), float(y)) for x, y in result["coordinates"]]
        if len(coords) != len(vectors):
            raise SidecarError(
                f"/v1/project returned {len(coords)} points for {len(vectors)} vectors")
        return coords

    def healthy(self) -> bool:
        try:
            status, payload = self._transport("/healthz", {})
            return status == 200 and bool(payload.get("ok"))
        except ProviderError:
            return False
