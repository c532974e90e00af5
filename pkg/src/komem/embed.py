"""Embedding providers, cosine similarity, and a brute-force top-k index.

Two providers share one contract (deterministic text -> unit vector):

* HashEmbedder — hermetic stand-in used by every mock-mode benchmark. It
  feature-hashes the character 3-gram multiset of the normalized text into d
  buckets with +/-1 signs, weighted per token, then L2-normalizes. Tokens
  without any letter (years, phase digits, bare numbers) get weight 0 and a
  pinned scaffold vocabulary gets weight 0.2, which reproduces the two
  qualitative behaviors of real sentence embedders this engine depends on:
  near-duplicate sentences land very close, and shared boilerplate does not
  dominate the distance structure.
* RemoteEmbedder — client for the HTTP sidecar serving a real model.

The index is exact brute force: N is at most 10^4 in every experiment and
density measurement needs exact ranking, so there is no ANN.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, Union

import numpy as np

from .core import normalize

__all__ = [
    "CorpusIndex",
    "DimensionMismatch",
    "EmbeddingProvider",
    "HashEmbedder",
    "KTooLarge",
    "RemoteEmbedder",
    "build_index",
    "cosine",
    "embed_hash",
    "load_index",
    "save_index",
    "top_k",
]

DEFAULT_DIM = 384  # mirrors the MiniLM dimension the live provider uses

# Scaffold words shared by virtually every fixture sentence and question.
# Down-weighting them mimics document-frequency weighting without making the
# embedding depend on any particular corpus. Calibrated once; treat as pinned.
SCAFFOLD_VOCABULARY = frozenset(
    """a an the of for with what is did which how its against
    shows show showed trial phase compound target activity inhibits
    report reported result results value
    binding affinity ic50 ki ec50 selectivity index nm""".split()
)
SCAFFOLD_WEIGHT = 0.2


class DimensionMismatch(ValueError):
    pass


class KTooLarge(ValueError):
    pass


class EmbeddingProvider(Protocol):
    """Deterministic text embedder: same text, same vector, unit L2 norm."""

    id: str
    d: int

    def embed(self, text: str) -> np.ndarray: ...

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray: ...


class HashEmbedder:
    """Character 3-gram feature hashing with token-level weighting."""

    def __init__(self, d: int = DEFAULT_DIM):
        if d < 16:
            raise ValueError(f"dimension too small: {d}")
        self.d = d
        self.id = f"hash-3gram-v1-d{d}"
        self._slot_cache: dict[str, tuple[int, float]] = {}

    def _slot(self, gram: str) -> tuple[int, float]:
        hit = self._slot_cache.get(gram)
        if hit is None:
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "little")
            hit = (value % self.d, 1.0 if (value >> 60) & 1 else -1.0)
            self._slot_cache[gram] = hit
        return hit

    @staticmethod
    def _token_weight(token: str) -> float:
        if not any(ch.isalpha() for ch in token):
            return 0.0
        if token.strip("-_.") in SCAFFOLD_VOCABULARY:
            return SCAFFOLD_WEIGHT
        return 1.0

    def embed(self, text: str) -> np.ndarray:
        canon = normalize(text)
        vec = np.zeros(self.d)
        if not canon:
            return vec
        tokens = canon.split(" ")
        # per-character weight map; a gram takes the min weight it touches
        weights = np.empty(len(canon))
        pos = 0
        for token in tokens:
            weights[pos : pos + len(token)] = self._token_weight(token)
            if pos + len(token) < len(canon):
                weights[pos + len(token)] = 1.0  # separator, resolved below
            pos += len(token) + 1
        for i in range(len(canon) - 2):
            w = weights[i : i + 3].min()
            if w == 0.0:
                continue
            slot, sign = self._slot(canon[i : i + 3])
            vec[slot] += sign * w
        norm = float(np.linalg.norm(vec))
        return vec / norm if norm > 0 else vec

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        return np.array([self.embed(t) for t in texts])


_shared_embedders: dict[int, HashEmbedder] = {}


def embed_hash(text: str, d: int = DEFAULT_DIM) -> np.ndarray:
    """Function form of the hash provider (shared instance per dimension)."""
    embedder = _shared_embedders.get(d)
    if embedder is None:
        embedder = _shared_embedders[d] = HashEmbedder(d)
    return embedder.embed(text)


class RemoteEmbedder:
    """Client for the embedding sidecar's POST /embed wire protocol."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        import requests

        self._session = requests.Session()
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        info = self._session.get(f"{self.base_url}/info", timeout=timeout).json()
        self.id = str(info["model_id"])
        self.d = int(info["d"])

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        resp = self._session.post(
            f"{self.base_url}/embed", json={"texts": list(texts)}, timeout=self.timeout
        )
        resp.raise_for_status()
        vectors = np.array(resp.json()["vectors"], dtype=np.float64)
        if vectors.shape != (len(texts), self.d):
            raise DimensionMismatch(f"sidecar returned shape {vectors.shape}")
        return vectors

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; inputs are unit vectors so this is the dot product."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


@dataclass
class CorpusIndex:
    """Immutable N x d matrix of document embeddings, rows aligned to doc_ids."""

    vectors: np.ndarray
    doc_ids: list[str]
    provider_id: str
    texts: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.vectors.shape[0] != len(self.doc_ids):
            raise ValueError("row count does not match doc_ids")

    def __len__(self) -> int:
        return len(self.doc_ids)


def build_index(
    texts: Sequence[str],
    provider: EmbeddingProvider,
    doc_ids: Sequence[str] | None = None,
) -> CorpusIndex:
    ids = list(doc_ids) if doc_ids is not None else [str(i) for i in range(len(texts))]
    vectors = provider.embed_batch(texts)
    return CorpusIndex(
        vectors=vectors,
        doc_ids=ids,
        provider_id=provider.id,
        texts=dict(zip(ids, texts)),
    )


def top_k(index: CorpusIndex, query_vec: np.ndarray, k: int) -> list[tuple[str, float]]:
    """k best documents by cosine, score descending, doc_id ascending on ties."""
    n = len(index)
    if not 1 <= k <= n:
        raise KTooLarge(f"k={k} outside [1, {n}]")
    scores = index.vectors @ np.asarray(query_vec, dtype=np.float64)
    order = sorted(range(n), key=lambda i: (-scores[i], index.doc_ids[i]))[:k]
    return [(index.doc_ids[i], float(scores[i])) for i in order]


_MAGIC = b"KOIX"
_VERSION = 1


def save_index(index: CorpusIndex, path: Union[str, Path]) -> None:
    """Flat binary cache: header, row-major little-endian f32, doc_id table."""
    provider_bytes = index.provider_id.encode("utf-8")
    n, d = index.vectors.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HIIH", _VERSION, d, n, len(provider_bytes)))
        fh.write(provider_bytes)
        fh.write(index.vectors.astype("<f4").tobytes(order="C"))
        table = json.dumps(index.doc_ids).encode("utf-8")
        fh.write(struct.pack("<I", len(table)))
        fh.write(table)


def load_index(path: Union[str, Path]) -> CorpusIndex:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"not an index cache: {path}")
        version, d, n, plen = struct.unpack("<HIIH", fh.read(12))
        if version != _VERSION:
            raise ValueError(f"unsupported index version {version}")
        provider_id = fh.read(plen).decode("utf-8")
        vectors = np.frombuffer(fh.read(4 * n * d), dtype="<f4").reshape(n, d)
        (tlen,) = struct.unpack("<I", fh.read(4))
        doc_ids = json.loads(fh.read(tlen).decode("utf-8"))
    return CorpusIndex(vectors=vectors.astype(np.float64), doc_ids=doc_ids, provider_id=provider_id)
