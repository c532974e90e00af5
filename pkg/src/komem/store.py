"""Persistent key-value store of KnowledgeObjects with O(1) lookup.

The store is an in-memory dict keyed by the 32-byte KoKey, journaled to disk
as JSON Lines: one KO per line, fixed field order, key stored redundantly as
hex and re-verified on load. Load replays the journal in order, so the last
line for a key wins — the same overwrite policy the in-memory index applies.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Optional, Union

from .core import KnowledgeObject, KoKey, Provenance, compute_key

__all__ = [
    "IoFailure",
    "KoStore",
    "MalformedJournal",
    "NotFound",
    "StoreStats",
    "load",
]


class IoFailure(OSError):
    """Journal write or read failed; the in-memory index stays consistent."""


class MalformedJournal(ValueError):
    """A journal line failed to parse or its stored key_hex does not match."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"journal line {line_no}: {reason}")
        self.line_no = line_no


class NotFound(NamedTuple):
    """Miss marker returned by get(); carries the queried key for diagnostics."""

    key: KoKey


@dataclass
class StoreStats:
    count: int
    journal_bytes: int
    bytes_per_ko: float


def _ko_to_json(ko: KnowledgeObject) -> str:
    # fixed field order is part of the journal contract
    record = {
        "subject": ko.subject,
        "predicate": ko.predicate,
        "object": ko.object,
        "provenance": {
            "source": ko.provenance.source,
            "timestamp": ko.provenance.timestamp,
            "confidence": ko.provenance.confidence,
        },
        "key_hex": ko.key.hex,
    }
    return json.dumps(record, ensure_ascii=False)


def _ko_from_json(line: str, line_no: int) -> KnowledgeObject:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedJournal(line_no, f"invalid JSON ({exc.msg})") from exc
    try:
        prov = record.get("provenance") or {}
        ko = KnowledgeObject(
            subject=record["subject"],
            predicate=record["predicate"],
            object=record["object"],
            provenance=Provenance(
                source=prov.get("source", ""),
                timestamp=prov.get("timestamp", ""),
                confidence=prov.get("confidence"),
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedJournal(line_no, f"bad record: {exc}") from exc
    stored_hex = record.get("key_hex")
    if stored_hex is not None and stored_hex != ko.key.hex:
        raise MalformedJournal(line_no, f"key_hex mismatch: {stored_hex} != {ko.key.hex}")
    return ko


class KoStore:
    """Single-writer, multi-reader KO store.

    get() is lock-free dict access (readers see consistent, fully-built KOs);
    put() and flush() serialize behind a lock. When a journal path is
    attached, put() appends the record immediately.
    """

    def __init__(self, journal_path: Union[str, Path, None] = None):
        self._index: dict[bytes, KnowledgeObject] = {}
        self._lock = threading.Lock()
        self.journal_path: Optional[Path] = Path(journal_path) if journal_path else None
        self.dirty_count = 0

    def __len__(self) -> int:
        return len(self._index)

    def __iter__(self) -> Iterator[KnowledgeObject]:
        return iter(list(self._index.values()))

    def put(self, ko: KnowledgeObject) -> Optional[KnowledgeObject]:
        """Insert or overwrite; returns the displaced KO if the key existed."""
        with self._lock:
            previous = self._index.get(ko.key.digest)
            self._index[ko.key.digest] = ko
            self.dirty_count += 1
            if self.journal_path is not None:
                try:
                    with open(self.journal_path, "a", encoding="utf-8") as fh:
                        fh.write(_ko_to_json(ko) + "\n")
                except OSError as exc:
                    # memory stays consistent; the put itself succeeded
                    raise IoFailure(f"journal append failed: {exc}") from exc
            return previous

    def get(self, key: KoKey) -> Union[KnowledgeObject, NotFound]:
        """O(1) lookup; a miss is a NotFound value, not an error."""
        hit = self._index.get(key.digest)
        return hit if hit is not None else NotFound(key)

    def get_by_pair(self, subject: str, predicate: str) -> Union[KnowledgeObject, NotFound]:
        return self.get(compute_key(subject, predicate))

    def flush(self, path: Union[str, Path, None] = None) -> StoreStats:
        """Rewrite the full journal (one line per live key) and return stats."""
        target = Path(path) if path is not None else self.journal_path
        if target is None:
            raise IoFailure("no journal path attached and none given")
        with self._lock:
            try:
                with open(target, "w", encoding="utf-8") as fh:
                    for ko in self._index.values():
                        fh.write(_ko_to_json(ko) + "\n")
            except OSError as exc:
                raise IoFailure(f"journal write failed: {exc}") from exc
            self.journal_path = target
            self.dirty_count = 0
            size = target.stat().st_size
            count = len(self._index)
        return StoreStats(
            count=count,
            journal_bytes=size,
            bytes_per_ko=size / count if count else 0.0,
        )

    def stats(self) -> StoreStats:
        size = 0
        if self.journal_path is not None and self.journal_path.exists():
            size = self.journal_path.stat().st_size
        count = len(self._index)
        return StoreStats(count, size, size / count if count else 0.0)


def load(path: Union[str, Path]) -> KoStore:
    """Reconstruct a store by replaying the journal; later lines win."""
    path = Path(path)
    store = KoStore()
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                ko = _ko_from_json(line, line_no)
                store._index[ko.key.digest] = ko
    except OSError as exc:
        raise IoFailure(f"journal read failed: {exc}") from exc
    store.journal_path = path
    return store
