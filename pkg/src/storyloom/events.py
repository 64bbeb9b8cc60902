"""Event recording, persistence, embedding, and hybrid retrieval.

Events are append-only: ids are dense 1..N and records are immutable once
accepted. The canonical persistence format is line-delimited JSON with an
explicit schema_version header line. Retrieval fuses case-insensitive
keyword overlap with cosine similarity over fixed-dimension embeddings.
"""

from __future__ import annotations

import hashlib
import json
import re
import struct
from dataclasses import dataclass, replace
from datetime import datetime

import numpy as np

from .world import Address, EnvironmentTree, NotFound, format_address, parse_address

SCHEMA_VERSION = 1
EMBEDDING_DIM = 512

KINDS = ("move", "chat", "none")
SALIENCES = ("normal", "low")


class EventError(Exception):
    pass


class InvariantViolation(EventError):
    pass


class EmbedderUnavailable(EventError):
    pass


class DimensionMismatch(EventError):
    pass


class NormalizationError(EventError):
    pass


class EmptyIndex(EventError):
    pass


class IOFailure(EventError):
    pass


class SchemaVersionMismatch(EventError):
    pass


@dataclass(frozen=True)
class Event:
    id: int
    start_time: datetime
    end_time: datetime
    participants: tuple[str, ...]
    location: Address
    description: str
    detail: str
    kind: str  # move | chat | none
    salience: str = "normal"  # normal | low

    @property
    def duration(self):
        return self.end_time - self.start_time

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "start_time": self.start_time.isoformat(),
            "end_time": self.end_time.isoformat(),
            "participants": list(self.participants),
            "location": format_address(self.location),
            "description": self.description,
            "detail": self.detail,
            "kind": self.kind,
            "salience": self.salience,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Event":
        return cls(
            id=int(rec["id"]),
            start_time=datetime.fromisoformat(rec["start_time"]),
            end_time=datetime.fromisoformat(rec["end_time"]),
            participants=tuple(rec["participants"]),
            location=parse_address(rec["location"]),
            description=rec["description"],
            detail=rec["detail"],
            kind=rec["kind"],
            salience=rec["salience"],
        )


def draft(
    start_time: datetime,
    end_time: datetime,
    participants: list[str] | tuple[str, ...],
    location: Address,
    description: str,
    detail: str,
    kind: str,
    salience: str = "normal",
) -> Event:
    """An event awaiting an id; record() assigns the real one."""
    return Event(
        id=0,
        start_time=start_time,
        end_time=end_time,
        participants=tuple(participants),
        location=location,
        description=description,
        detail=detail,
        kind=kind,
        salience=salience,
    )


@dataclass(frozen=True)
class EventEmbedding:
    event_id: int
    vector: np.ndarray  # unit-normalized, EMBEDDING_DIM entries


class HashEmbedder:
    """Deterministic text embedder for tests and offline runs.

    Expands sha256 digests of the input into a fixed-dimension vector;
    the same text always maps to the same unit vector.
    """

    def __init__(self, dim: int = EMBEDDING_DIM):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        values: list[float] = []
        counter = 0
        while len(values) < self.dim:
            digest = hashlib.sha256(f"{counter}:{text}".encode("utf-8")).digest()
            for (chunk,) in struct.iter_unpack(">I", digest):
                values.append(chunk / 2**31 - 1.0)  # map uint32 to [-1, 1)
            counter += 1
        return np.asarray(values[: self.dim], dtype=np.float64)


_TOKEN_RE = re.compile(r"[\w']+")


def tokenize(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower()))


def keyword_score(query_tokens: set[str], event: Event) -> float:
    """|query tokens ∩ event tokens| / |query tokens| over description+detail."""
    if not query_tokens:
        return 0.0
    event_tokens = tokenize(event.description + " " + event.detail)
    return len(query_tokens & event_tokens) / len(query_tokens)


class EventStore:
    """Single-writer event log with embeddings and hybrid retrieval."""

    def __init__(self, world: EnvironmentTree | None = None, embedder=None, dim: int = EMBEDDING_DIM):
        self.world = world
        self.embedder = embedder
        self.dim = dim
        self._events: list[Event] = []
        self._embeddings: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def get(self, event_id: int) -> Event:
        if 1 <= event_id <= len(self._events):
            return self._events[event_id - 1]
        raise KeyError(event_id)

    def _validate(self, ev: Event) -> None:
        if ev.kind not in KINDS:
            raise InvariantViolation(f"kind must be one of {KINDS}, got {ev.kind!r}")
        if ev.salience not in SALIENCES:
            raise InvariantViolation(f"salience must be one of {SALIENCES}, got {ev.salience!r}")
        if not ev.participants:
            raise InvariantViolation("event requires at least one participant")
        if ev.kind == "chat" and len(ev.participants) < 2:
            raise InvariantViolation("chat requires >=2 participants")
        if ev.end_time < ev.start_time:
            raise InvariantViolation("end_time must be >= start_time")
        if self.world is not None:
            try:
                self.world.resolve(ev.location)
            except NotFound as exc:
                raise InvariantViolation(f"location does not resolve: {exc}") from exc

    def record(self, ev: Event) -> int:
        """Assign the next id, validate, and append; the event is then frozen."""
        self._validate(ev)
        event_id = len(self._events) + 1
        self._events.append(replace(ev, id=event_id))
        return event_id

    # -- embeddings ---------------------------------------------------------

    def embed_event(self, ev: Event, embedder=None) -> EventEmbedding:
        """Embed the event detail; idempotent per event id."""
        if ev.id in self._embeddings:
            return EventEmbedding(ev.id, self._embeddings[ev.id])
        embedder = embedder or self.embedder
        if embedder is None:
            raise EmbedderUnavailable("no embedder configured")
        vector = np.asarray(embedder.embed(ev.detail), dtype=np.float64)
        if vector.shape != (self.dim,):
            raise DimensionMismatch(f"expected {self.dim} dims, got {vector.shape}")
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            raise NormalizationError("embedder returned a zero vector")
        unit = vector / norm
        self._embeddings[ev.id] = unit
        return EventEmbedding(ev.id, unit)

    def embed_all(self, embedder=None) -> int:
        count = 0
        for ev in self._events:
            if ev.id not in self._embeddings:
                self.embed_event(ev, embedder)
                count += 1
        return count

    def embedding_of(self, event_id: int) -> np.ndarray | None:
        return self._embeddings.get(event_id)

    # -- retrieval ----------------------------------------------------------

    def retrieve(
        self,
        query: str,
        k: int,
        time_range: tuple[datetime, datetime] | None = None,
        participants: list[str] | None = None,
        kinds: list[str] | None = None,
    ) -> list[tuple[Event, float]]:
        """Hybrid search: union of keyword and dense top-k, re-ranked.

        Final score is max(keyword overlap, cosine); ties break toward the
        smaller event id. Filters given as None are ignored; an empty
        collection matches nothing.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self._events:
            raise EmptyIndex("no events recorded")

        candidates = [ev for ev in self._events if _passes(ev, time_range, participants, kinds)]

        query_tokens = tokenize(query)
        kw_scores = {ev.id: keyword_score(query_tokens, ev) for ev in candidates}
        kw_top = sorted(
            (ev for ev in candidates if kw_scores[ev.id] > 0),
            key=lambda ev: (-kw_scores[ev.id], ev.id),
        )[:k]

        dense_scores: dict[int, float] = {}
        if self.embedder is not None:
            qvec = np.asarray(self.embedder.embed(query), dtype=np.float64)
            qnorm = float(np.linalg.norm(qvec))
            if qnorm > 0:
                qunit = qvec / qnorm
                for ev in candidates:
                    emb = self._embeddings.get(ev.id)
                    if emb is not None:
                        dense_scores[ev.id] = float(np.dot(qunit, emb))
        dense_top = sorted(
            (ev for ev in candidates if ev.id in dense_scores),
            key=lambda ev: (-dense_scores[ev.id], ev.id),
        )[:k]

        union: dict[int, Event] = {}
        for ev in list(kw_top) + list(dense_top):
            union.setdefault(ev.id, ev)

        def final_score(ev: Event) -> float:
            parts = []
            if kw_scores.get(ev.id, 0.0) > 0:
                parts.append(kw_scores[ev.id])
            if ev.id in dense_scores:
                parts.append(dense_scores[ev.id])
            return max(parts)

        ranked = sorted(union.values(), key=lambda ev: (-final_score(ev), ev.id))
        return [(ev, final_score(ev)) for ev in ranked[:k]]

    # -- persistence --------------------------------------------------------

    def export_log(self, path) -> int:
        """Write the full log: a schema_version header line, then one event per line."""
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(json.dumps({"schema_version": SCHEMA_VERSION}) + "\n")
                for ev in self._events:
                    fh.write(json.dumps(ev.to_record(), ensure_ascii=False) + "\n")
        except OSError as exc:
            raise IOFailure(f"cannot write {path}: {exc}") from exc
        return len(self._events)

    def import_log(self, path) -> int:
        """Load an exported log into this (empty) store; returns event count."""
        if self._events:
            raise IOFailure("import requires an empty store")
        try:
            with open(path, encoding="utf-8") as fh:
                lines = [line for line in (l.strip() for l in fh) if line]
        except OSError as exc:
            raise IOFailure(f"cannot read {path}: {exc}") from exc
        if not lines:
            raise SchemaVersionMismatch("missing schema_version header")
        header = json.loads(lines[0])
        if header.get("schema_version") != SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"expected schema_version {SCHEMA_VERSION}, got {header.get('schema_version')!r}"
            )
        for line in lines[1:]:
            ev = Event.from_record(json.loads(line))
            self._validate(ev)
            if ev.id != len(self._events) + 1:
                raise InvariantViolation(f"non-dense id {ev.id} in imported log")
            self._events.append(ev)
        return len(self._events)


def _passes(
    ev: Event,
    time_range: tuple[datetime, datetime] | None,
    participants: list[str] | None,
    kinds: list[str] | None,
) -> bool:
    if time_range is not None:
        lo, hi = time_range
        if ev.end_time < lo or ev.start_time > hi:
            return False
    if participants is not None and not set(participants) & set(ev.participants):
        return False
    if kinds is not None and ev.kind not in kinds:
        return False
    return True
