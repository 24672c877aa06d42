"""External embedding-service client, the alternative to the built-in
trigram embedder for analysis runs."""

from __future__ import annotations

import os
from typing import Optional

import httpx
import numpy as np

from .metrics import UndefinedMetricError

EMBED_URL_ENV = "WRITETRACE_EMBED_URL"


class EmbeddingServiceError(Exception):
    """The embedding service could not produce a vector."""


class HttpServiceEmbedder:
    """POSTs {"text": ...} to {base_url}/embed and expects {"vector": [...]}."""

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 20.0,
        client: Optional[httpx.Client] = None,
    ):
        self._client = client or httpx.Client(
            base_url=base_url.rstrip("/"), timeout=timeout
        )

    @classmethod
    def from_env(cls, **kwargs) -> "HttpServiceEmbedder":
        base_url = os.environ.get(EMBED_URL_ENV)
        if not base_url:
            raise EmbeddingServiceError(f"{EMBED_URL_ENV} is not set")
        return cls(base_url, **kwargs)

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise UndefinedMetricError("cannot embed empty text")
        try:
            response = self._client.post("/embed", json={"text": text})
            response.raise_for_status()
            vector = np.asarray(response.json()["vector"], dtype=float)
        except (httpx.HTTPError, KeyError, TypeError, ValueError) as exc:
            raise EmbeddingServiceError(f"embedding request failed: {exc}") from exc
        if vector.ndim != 1 or vector.size == 0:
            raise EmbeddingServiceError("service returned a malformed vector")
        return vector
