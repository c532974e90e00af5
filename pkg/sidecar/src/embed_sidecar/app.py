"""HTTP sidecar serving sentence embeddings.

Wraps one local embedding model (all-MiniLM-L6-v2 by default, d=384) behind
two endpoints:

    POST /embed   {"texts": [...]} -> {"vectors": [[...]], "model_id": str, "d": int}
    GET  /info    -> {"model_id": str, "d": int}

Plain JSON, no auth, no batching protocol: a localhost tool the memory
engine's RemoteEmbedder points at. Vectors are unit-norm; identical input
yields identical output for a fixed model revision. The model loads once at
startup.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from typing import Protocol, Sequence

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

DEFAULT_MODEL_ID = "sentence-transformers/all-MiniLM-L6-v2"
MAX_TEXT_CHARS = 8_192


class Encoder(Protocol):
    model_id: str
    d: int

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class SentenceTransformerEncoder:
    """Loads the real model; import deferred so the app module stays light."""

    def __init__(self, model_id: str = DEFAULT_MODEL_ID):
        from sentence_transformers import SentenceTransformer

        self.model_id = model_id
        self._model = SentenceTransformer(model_id)
        self.d = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(list(texts), normalize_embeddings=True,
                               show_progress_bar=False),
            dtype=np.float64,
        )


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(encoder: Encoder | None = None,
               model_id: str = DEFAULT_MODEL_ID) -> FastAPI:
    """Build the service; pass an encoder to skip loading the real model."""
    state: dict = {"encoder": encoder, "error": None}

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        if state["encoder"] is None:
            try:
                state["encoder"] = SentenceTransformerEncoder(model_id)
            except Exception as exc:  # model download/load failure
                state["error"] = f"{type(exc).__name__}: {exc}"
        yield

    app = FastAPI(title="komem embedding sidecar", lifespan=lifespan)

    def ready() -> Encoder | None:
        return state["encoder"]

    @app.get("/info")
    def info():
        encoder = ready()
        if encoder is None:
            return JSONResponse(
                status_code=500,
                content={"error": state["error"] or "model not loaded"},
            )
        return {"model_id": encoder.model_id, "d": encoder.d}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        encoder = ready()
        if encoder is None:
            return JSONResponse(
                status_code=500,
                content={"error": state["error"] or "model not loaded"},
            )
        if not request.texts:
            return JSONResponse(status_code=400,
                                content={"error": "texts must be non-empty"})
        oversize = [i for i, t in enumerate(request.texts) if len(t) > MAX_TEXT_CHARS]
        if oversize:
            return JSONResponse(
                status_code=413,
                content={"error": f"texts over {MAX_TEXT_CHARS} chars at {oversize}"},
            )
        try:
            vectors = encoder.encode(request.texts)
        except Exception as exc:
            return JSONResponse(status_code=500,
                                content={"error": f"encoding failed: {exc}"})
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        vectors = vectors / norms
        return {
            "vectors": vectors.tolist(),
            "model_id": encoder.model_id,
            "d": int(vectors.shape[1]),
        }

    return app
