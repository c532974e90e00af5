"""Canonical domain types, text normalization, and deterministic key hashing.

Every other module builds on the two contracts here: ``normalize`` is the
bit-exact text canonicalization applied before any hashing or matching, and
``compute_key`` derives the 32-byte address of a fact from its normalized
(subject, predicate) pair. Stability of these two functions across runs,
platforms, and store reloads is what makes the whole memory engine
hash-addressable, so their behavior is pinned down to the byte.
"""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime

__all__ = [
    "EmptyComponentError",
    "KnowledgeObject",
    "KoKey",
    "Provenance",
    "compute_key",
    "normalize",
]

# Component separator inside the hashed byte string. Raw concatenation is not
# injective ("ab"+"c" == "a"+"bc"); 0x1F (unit separator) never survives
# normalization, so it cannot occur inside a component.
_KEY_SEPARATOR = b"\x1f"

_WHITESPACE_RUN = re.compile(r"\s+")
_KEEP = frozenset(" -_.")


class EmptyComponentError(ValueError):
    """A key component normalized to the empty string."""


def _normalize_once(raw: str) -> str:
    text = unicodedata.normalize("NFKC", raw).casefold()
    text = _WHITESPACE_RUN.sub(" ", text).strip()
    return "".join(ch for ch in text if ch.isalnum() or ch in _KEEP)


def normalize(raw: str) -> str:
    """Canonicalize text: NFKC, casefold, collapse whitespace, trim, strip.

    Characters outside letters/digits/space/hyphen/underscore/period are
    dropped. The pipeline is run to a fixpoint because casefolding can
    occasionally denormalize NFKC output; in practice the second pass is a
    no-op for ASCII input. Idempotent by construction.
    """
    text = _normalize_once(raw)
    while True:
        again = _normalize_once(text)
        if again == text:
            return text
        text = again


@dataclass(frozen=True)
class KoKey:
    """32-byte SHA-256 digest addressing one (subject, predicate) pair."""

    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != 32:
            raise ValueError(f"KoKey requires a 32-byte digest, got {len(self.digest)}")

    @property
    def hex(self) -> str:
        return self.digest.hex()

    def __repr__(self) -> str:
        return f"KoKey({self.hex[:12]}...)"


def compute_key(subject: str, predicate: str) -> KoKey:
    """Derive the storage key: SHA-256 over normalized subject and predicate.

    The two normalized components are joined with a 0x1F unit separator and
    UTF-8 encoded, which guarantees distinct pairs produce distinct inputs.

    Raises:
        EmptyComponentError: if either component normalizes to "".
    """
    subj = normalize(subject)
    pred = normalize(predicate)
    if not subj:
        raise EmptyComponentError(f"subject normalized to empty: {subject!r}")
    if not pred:
        raise EmptyComponentError(f"predicate normalized to empty: {predicate!r}")
    payload = subj.encode("utf-8") + _KEY_SEPARATOR + pred.encode("utf-8")
    return KoKey(hashlib.sha256(payload).digest())


@dataclass(frozen=True)
class Provenance:
    """Where a fact came from: free-text source, ISO-8601 timestamp, confidence."""

    source: str = ""
    timestamp: str = ""
    confidence: float | None = None

    def __post_init__(self) -> None:
        if self.timestamp:
            # fromisoformat on 3.10 rejects a trailing Z; accept it anyway
            candidate = self.timestamp.replace("Z", "+00:00")
            try:
                datetime.fromisoformat(candidate)
            except ValueError as exc:
                raise ValueError(f"timestamp is not ISO-8601: {self.timestamp!r}") from exc
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence outside [0, 1]: {self.confidence}")


@dataclass(frozen=True)
class KnowledgeObject:
    """A discrete, hash-addressed (subject, predicate, object, provenance) tuple.

    ``key`` is derived, never supplied: it always equals
    compute_key(subject, predicate). The object value does not participate in
    the key; rewriting the same (subject, predicate) with a new value is the
    store's overwrite policy, not a new address.
    """

    subject: str
    predicate: str
    object: str
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self) -> None:
        # compute_key raises EmptyComponentError for empty components,
        # enforcing the non-emptiness invariant as a side effect
        object.__setattr__(self, "_key", compute_key(self.subject, self.predicate))

    @property
    def key(self) -> KoKey:
        return self._key  # type: ignore[attr-defined]
