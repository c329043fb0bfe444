"""HTTP service: JSON bodies under /v1/, one envelope per response.

Every response body carries exactly one of `result` or `error`. Request
validation failures, budget overruns, and internal faults all come back as
error envelopes; only a model-load problem at startup aborts the process.
"""

from __future__ import annotations

import importlib.resources
import os
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import data as _data
from .models import (
    TUNE_LOCK,
    BigramMaskedLM,
    ModelLoadError,
    SeededEmbedder,
    blanc_tune_score,
    project_2d,
    tokenize,
)


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8801
    dimension: int = 64
    token_limit: int = 512
    corpus_path: str | None = None

    @classmethod
    def from_env(cls, env=os.environ) -> "ServiceConfig":
        return cls(
            host=env.get("CONSTSUM_SIDECAR_HOST", cls.host),
            port=int(env.get("CONSTSUM_SIDECAR_PORT", cls.port)),
            dimension=int(env.get("CONSTSUM_SIDECAR_DIMENSION", cls.dimension)),
            token_limit=int(env.get("CONSTSUM_SIDECAR_TOKEN_LIMIT", cls.token_limit)),
            corpus_path=env.get("CONSTSUM_SIDECAR_CORPUS") or None,
        )


class RequestError(ValueError):
    """Invalid request body; reported as an error envelope."""


def _load_corpus(cfg: ServiceConfig) -> str:
    if cfg.corpus_path:
        with open(cfg.corpus_path, encoding="utf-8") as fh:
            return fh.read()
    return (importlib.resources.files(_data) / "seed_corpus.txt").read_text("utf-8")


def _require(body: dict, key: str, kind: type, what: str):
    if key not in body:
        raise RequestError(f"missing field '{key}'")
    value = body[key]
    if not isinstance(value, kind):
        raise RequestError(f"field '{key}' must be {what}")
    return value


def _string_list(body: dict, key: str) -> list[str]:
    value = _require(body, key, list, "a list of strings")
    if not all(isinstance(v, str) for v in value):
        raise RequestError(f"field '{key}' must be a list of strings")
    return value


def create_app(cfg: ServiceConfig | None = None) -> FastAPI:
    cfg = cfg or ServiceConfig()
    corpus_text = _load_corpus(cfg)
    embedder = SeededEmbedder(cfg.dimension)
    masked_lm = BigramMaskedLM.from_corpus(corpus_text)  # ModelLoadError aborts startup
    app = FastAPI(title="constsum-sidecar", docs_url=None, redoc_url=None)

    def route(path: str, handler):
        async def endpoint(request: Request):
            try:
                try:
                    body = await request.json()
                except Exception:
                    raise RequestError("body is not valid JSON")
                if not isinstance(body, dict):
                    raise RequestError("body must be a JSON object")
                return JSONResponse({"result": handler(body)})
            except RequestError as exc:
                return JSONResponse({"error": str(exc)})
            except Exception as exc:  # keep the envelope even on bugs
                return JSONResponse({"error": f"internal: {exc}"})

        app.post(path)(endpoint)

    def do_embed(body: dict) -> dict:
        texts = _string_list(body, "texts")
        if not texts:
            raise RequestError("field 'texts' must not be empty")
        return {"vectors": [embedder.embed_one(t).tolist() for t in texts]}

    def do_tokenize(body: dict) -> dict:
        text = _require(body, "text", str, "a string")
        return {"tokens": tokenize(text)}

    def do_fill_mask(body: dict) -> dict:
        tokens = _string_list(body, "tokens")
        if not tokens:
            raise RequestError("field 'tokens' must not be empty")
        positions = _require(body, "mask_positions", list, "a list of integers")
        if not all(isinstance(p, int) and not isinstance(p, bool) for p in positions):
            raise RequestError("field 'mask_positions' must be a list of integers")
        if list(positions) != sorted(set(positions)):
            raise RequestError("mask_positions must be strictly increasing")
        if positions and not (0 <= positions[0] and positions[-1] < len(tokens)):
            raise RequestError("mask_positions out of range")
        context = body.get("context", "")
        if not isinstance(context, str):
            raise RequestError("field 'context' must be a string")
        context_tokens = tokenize(context)
        total = len(context_tokens) + len(tokens)
        if total > cfg.token_limit:
            raise RequestError(
                f"context + sequence is {total} tokens, over the "
                f"{cfg.token_limit}-token budget; truncate the input")
        if not positions:
            return {"predictions": []}
        return {"predictions": masked_lm.predict(tokens, positions, context_tokens)}

    def do_blanc_tune(body: dict) -> dict:
        document = _require(body, "document", str, "a string")
        summary = _require(body, "summary", str, "a string")
        overrides = body.get("overrides", {})
        if not isinstance(overrides, dict):
            raise RequestError("field 'overrides' must be an object")
        params = {"mask_every": 4, "min_token_len": 4, "weight": 4}
        for key, value in overrides.items():
            if key not in params:
                raise RequestError(f"unknown override '{key}'")
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise RequestError(f"override '{key}' must be a positive integer")
            params[key] = value
        with TUNE_LOCK:
            score = blanc_tune_score(masked_lm, document, summary, **params)
        return {"score": score}

    def do_project(body: dict) -> dict:
        vectors = _require(body, "vectors", list, "a list of vectors")
        if not vectors:
            raise RequestError("field 'vectors' must not be empty")
        widths = set()
        for vec in vectors:
            if not isinstance(vec, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec
            ):
                raise RequestError("field 'vectors' must hold lists of numbers")
            widths.add(len(vec))
        if len(widths) != 1 or 0 in widths:
            raise RequestError("vectors must be non-empty and of equal length")
        matrix = np.asarray(vectors, dtype=float)
        if not np.isfinite(matrix).all():
            raise RequestError("vectors must be finite")
        return {"coordinates": [[x, y] for x, y in project_2d(vectors)]}

    route("/v1/embed", do_embed)
    route("/v1/tokenize", do_tokenize)
    route("/v1/fill_mask", do_fill_mask)
    route("/v1/blanc_tune", do_blanc_tune)
    route("/v1/project", do_project)

    async def healthz(request: Request):
        return JSONResponse({"ok": True})

    app.get("/healthz")(healthz)
    app.post("/healthz")(healthz)
    return app
