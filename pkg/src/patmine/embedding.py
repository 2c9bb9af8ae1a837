"""Embedding backends, cosine similarity, and a persistent embedding cache.

Three backends share one contract:

* ``reference`` — the all-mpnet-base-v2 sentence-transformer (dimension 768).
  Loaded lazily; raises :class:`TransportError` when the model is unavailable.
* ``test``      — a deterministic SHA-256-derived pseudo-embedding (dimension 64)
  for fully offline, reproducible test runs.
* ``remote``    — an HTTP service speaking ``POST /embed`` with a JSON body
  ``{"texts": [...]}`` and response ``{"dimension": N, "vectors": [[...], ...]}``;
  the base URL comes from the ``PATMINE_EMBED_URL`` environment variable.

All vectors are unit-normalized float64 arrays. Text is canonicalized (trimmed,
whitespace runs collapsed to single spaces) before hashing and embedding, so the
cache key and the embedded content always agree.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import struct
import tempfile
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ContractViolation, TransportError

REMOTE_URL_ENV = "PATMINE_EMBED_URL"

_WHITESPACE_RUN = re.compile(r"\s+")


def canonicalize_text(text: str) -> str:
    """Trim and collapse whitespace runs to single spaces."""
    return _WHITESPACE_RUN.sub(" ", text).strip()


def text_key(text: str) -> str:
    """Content hash of the canonicalized text, used as the cache key."""
    return hashlib.sha256(canonicalize_text(text).encode("utf-8")).hexdigest()


class EmbeddingProvider(ABC):
    """Deterministic text-to-unit-vector backend.

    Implementations return one normalized vector per input text; the same text
    must produce bitwise-identical vectors across calls and across runs for the
    same backend version.
    """

    backend_id: str
    dimension: int

    @abstractmethod
    def embed_raw(self, texts: Sequence[str]) -> np.ndarray:
        """Embed already-canonicalized texts into an (n, dimension) array."""


class TestBackend(EmbeddingProvider):
    """Hash-derived pseudo-embedding: deterministic, offline, version-stable.

    Each coordinate is read from SHA-256 in counter mode over the text, mapped
    to [-1, 1), and the vector is normalized. Distinct texts land on effectively
    orthogonal directions; identical texts collide exactly.
    """

    backend_id = "test"
    dimension = 64

    def embed_raw(self, texts: Sequence[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dimension), dtype=np.float64)
        for i, text in enumerate(texts):
            out[i] = self._vector(text)
        return out

    def _vector(self, text: str) -> np.ndarray:
        payload = text.encode("utf-8")
        values = []
        counter = 0
        while len(values) < self.dimension:
            digest = hashlib.sha256(payload + struct.pack(">I", counter)).digest()
            for j in range(0, 32, 8):
                chunk = int.from_bytes(digest[j : j + 8], "big")
                values.append(chunk / 2**63 - 1.0)
            counter += 1
        vec = np.array(values[: self.dimension], dtype=np.float64)
        return vec / np.linalg.norm(vec)


class ReferenceBackend(EmbeddingProvider):
    """all-mpnet-base-v2 sentence transformer (dimension 768)."""

    backend_id = "all-mpnet-base-v2"
    dimension = 768

    def __init__(self):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise TransportError(
                "reference backend requires the sentence-transformers package "
                "(install the 'reference' extra)"
            ) from exc
        try:
            self._model = SentenceTransformer("sentence-transformers/all-mpnet-base-v2")
        except Exception as exc:
            raise TransportError(f"could not load all-mpnet-base-v2: {exc}") from exc

    def embed_raw(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self._model.encode(list(texts), normalize_embeddings=True, show_progress_bar=False)
        return np.asarray(vectors, dtype=np.float64)


class RemoteBackend(EmbeddingProvider):
    """HTTP embedding service; vectors arrive pre-normalized."""

    def __init__(self, base_url: str | None = None, timeout: float = 30.0):
        url = base_url or os.environ.get(REMOTE_URL_ENV)
        if not url:
            raise TransportError(f"remote backend needs a base URL ({REMOTE_URL_ENV} is unset)")
        self._url = url.rstrip("/") + "/embed"
        self._timeout = timeout
        self.backend_id = f"remote:{url.rstrip('/')}"
        self.dimension = self._probe_dimension()

    def _probe_dimension(self) -> int:
        return len(self._request(["dimension probe"])["vectors"][0])

    def _request(self, texts: Sequence[str]) -> dict:
        import requests

        try:
            response = requests.post(self._url, json={"texts": list(texts)}, timeout=self._timeout)
            response.raise_for_status()
            body = response.json()
        except requests.RequestException as exc:
            raise TransportError(f"embedding service request failed: {exc}") from exc
        if "vectors" not in body or "dimension" not in body:
            raise TransportError("embedding service response missing 'dimension'/'vectors'")
        return body

    def embed_raw(self, texts: Sequence[str]) -> np.ndarray:
        body = self._request(texts)
        vectors = np.asarray(body["vectors"], dtype=np.float64)
        if vectors.shape != (len(texts), body["dimension"]):
            raise TransportError("embedding service returned a malformed vector block")
        return vectors


def get_provider(backend: str, base_url: str | None = None) -> EmbeddingProvider:
    """Construct a backend by name: ``test``, ``reference``, or ``remote``."""
    if backend == "test":
        return TestBackend()
    if backend == "reference":
        return ReferenceBackend()
    if backend == "remote":
        return RemoteBackend(base_url)
    raise ContractViolation(f"unknown embedding backend {backend!r}")


class EmbeddingCache:
    """Content-addressed on-disk vector store keyed by (backend_id, text hash).

    Vectors are stored one per file as ``.npy`` under ``<root>/<backend>/``, so
    reads are concurrent-safe and writes go through an atomic rename. A
    process-local dict fronts the disk store.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._memory: dict[tuple[str, str], np.ndarray] = {}
        self._lock = threading.Lock()

    def _path(self, backend_id: str, key: str) -> Path:
        safe_backend = re.sub(r"[^A-Za-z0-9._-]", "_", backend_id)
        return self.root / safe_backend / f"{key}.npy"

    def get(self, backend_id: str, key: str) -> np.ndarray | None:
        with self._lock:
            cached = self._memory.get((backend_id, key))
        if cached is not None:
            return cached
        path = self._path(backend_id, key)
        if not path.exists():
            return None
        vector = np.load(path)
        with self._lock:
            self._memory[(backend_id, key)] = vector
        return vector

    def put(self, backend_id: str, key: str, vector: np.ndarray) -> None:
        path = self._path(backend_id, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock:
            self._memory[(backend_id, key)] = vector
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as handle:
                    np.save(handle, vector)
                os.replace(tmp, path)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)


def embed_texts(
    provider: EmbeddingProvider,
    texts: Sequence[str],
    cache: EmbeddingCache | None = None,
) -> list[np.ndarray]:
    """Embed several texts, consulting the cache per text.

    Raises :class:`ContractViolation` for texts that are empty after trimming,
    and validates the backend's dimension and normalization contract.
    """
    canonical = []
    for text in texts:
        c = canonicalize_text(text)
        if not c:
            raise ContractViolation("cannot embed empty text")
        canonical.append(c)

    keys = [hashlib.sha256(c.encode("utf-8")).hexdigest() for c in canonical]
    vectors: list[np.ndarray | None] = [None] * len(texts)
    missing: list[int] = []
    for i, key in enumerate(keys):
        cached = cache.get(provider.backend_id, key) if cache is not None else None
        if cached is not None:
            vectors[i] = cached
        else:
            missing.append(i)

    if missing:
        fresh = provider.embed_raw([canonical[i] for i in missing])
        fresh = np.atleast_2d(np.asarray(fresh, dtype=np.float64))
        if fresh.shape != (len(missing), provider.dimension):
            raise ContractViolation(
                f"backend {provider.backend_id!r} returned shape {fresh.shape}, "
                f"expected ({len(missing)}, {provider.dimension})"
            )
        norms = np.linalg.norm(fresh, axis=1)
        if np.any(norms == 0):
            raise ContractViolation(f"backend {provider.backend_id!r} returned a zero vector")
        fresh = fresh / norms[:, None]
        for row, i in enumerate(missing):
            vec = np.ascontiguousarray(fresh[row])
            vec.setflags(write=False)
            vectors[i] = vec
            if cache is not None:
                cache.put(provider.backend_id, keys[i], vec)

    return [v for v in vectors if v is not None]


def embed_text(
    provider: EmbeddingProvider,
    text: str,
    cache: EmbeddingCache | None = None,
) -> np.ndarray:
    """Embed one text into a unit-norm vector of the provider's dimension."""
    return embed_texts(provider, [text], cache)[0]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clipped into [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"dimension mismatch: {a.shape} vs {b.shape}")
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        raise ContractViolation("cosine similarity undefined for zero vectors")
    return float(np.clip(np.dot(a, b) / denom, -1.0, 1.0))


def matches_above(
    query: np.ndarray,
    index: Sequence[tuple[str, np.ndarray]],
    threshold: float,
) -> list[tuple[str, float]]:
    """Every (key, score) with score strictly greater than the threshold.

    Sorted by score descending, then key ascending. A score exactly equal to
    the threshold is excluded.
    """
    if not 0 < threshold <= 1:
        raise ContractViolation(f"threshold must be in (0, 1], got {threshold}")
    hits = []
    for key, vector in index:
        score = cosine_similarity(query, vector)
        if score > threshold:
            hits.append((key, score))
    hits.sort(key=lambda item: (-item[1], item[0]))
    return hits
