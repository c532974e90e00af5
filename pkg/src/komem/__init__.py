"""komem: hash-addressed knowledge-object memory with density-adaptive retrieval."""

from .core import KnowledgeObject, KoKey, Provenance, compute_key, normalize
from .embed import HashEmbedder, build_index, cosine, top_k
from .retrieval import RetrievalConfig, adaptive_retrieve, build_key_index, density
from .store import KoStore, NotFound, load

__all__ = [
    "HashEmbedder",
    "KnowledgeObject",
    "KoKey",
    "KoStore",
    "NotFound",
    "Provenance",
    "RetrievalConfig",
    "adaptive_retrieve",
    "build_index",
    "build_key_index",
    "compute_key",
    "cosine",
    "density",
    "load",
    "normalize",
    "top_k",
]

__version__ = "0.1.0"
