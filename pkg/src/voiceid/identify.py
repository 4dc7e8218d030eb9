"""Open-set speaker identification over an enrollable embedding database.

The decision rule: for each enrolled speaker c, r_c is the mean inner
product between the query and that speaker's entries. If every r_c is
strictly negative the query is unknown; otherwise the speaker with the
highest r_c wins (ties go to the earliest-enrolled speaker).
"""

import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .embed import Embedding, similarity
from .errors import (
    BadEmbeddingError,
    EmptyDbError,
    InvalidNameError,
    NoEntriesError,
    ParseError,
    SchemaVersionMismatchError,
)

DB_SCHEMA_VERSION = 1
UNIT_NORM_TOL = 1e-5


@dataclass
class DbEntry:
    embedding: Embedding
    created_at: str  # ISO-8601


@dataclass
class SpeakerDb:
    """Ordered speaker name -> list of enrolled embeddings."""

    speakers: dict = field(default_factory=dict)  # insertion-ordered

    def __len__(self):
        return len(self.speakers)

    def entry_count(self, name: str) -> int:
        return len(self.speakers[name])


@dataclass
class IdentificationResult:
    decision: str  # "known" | "unknown"
    speaker: str | None
    scores: dict  # name -> r_c


def _check_embedding(e: Embedding):
    v = np.asarray(e.values)
    if abs(float(np.linalg.norm(v)) - 1.0) > UNIT_NORM_TOL:
        raise BadEmbeddingError("embedding is not unit-norm")


def score_speaker(query: Embedding, entries) -> float:
    """Mean inner product between the query and one speaker's entries (r_c)."""
    entries = list(entries)
    if not entries:
        raise NoEntriesError("speaker has no entries")
    return float(
        np.mean([similarity(query, entry.embedding) for entry in entries])
    )


def identify(query: Embedding, db: SpeakerDb) -> IdentificationResult:
    """Apply the voting rule over every enrolled speaker."""
    if len(db) == 0:
        raise EmptyDbError("no speakers enrolled")
    scores = {
        name: score_speaker(query, entries) for name, entries in db.speakers.items()
    }
    best_name = None
    best = -np.inf
    for name, r in scores.items():  # insertion order breaks ties
        if r > best:
            best, best_name = r, name
    if best < 0.0:
        return IdentificationResult("unknown", None, scores)
    return IdentificationResult("known", best_name, scores)


def enroll(db: SpeakerDb, name: str, embedding: Embedding, created_at: str | None = None) -> SpeakerDb:
    """Add an embedding under a speaker, creating the speaker if needed."""
    if not isinstance(name, str) or not name.strip():
        raise InvalidNameError("speaker name must be non-empty")
    _check_embedding(embedding)
    if created_at is None:
        created_at = datetime.now(timezone.utc).isoformat()
    db.speakers.setdefault(name, []).append(DbEntry(embedding, created_at))
    return db


def _db_to_json(db: SpeakerDb) -> dict:
    return {
        "version": DB_SCHEMA_VERSION,
        "speakers": [
            {
                "name": name,
                "entries": [
                    {
                        "created_at": entry.created_at,
                        # float() of a float32 round-trips the 32-bit value
                        "embedding": [float(v) for v in entry.embedding.values],
                    }
                    for entry in entries
                ],
            }
            for name, entries in db.speakers.items()
        ],
    }


def save_db(db: SpeakerDb, path) -> None:
    """Write the database atomically (temp file + rename)."""
    payload = json.dumps(_db_to_json(db), indent=1)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".voiceid-db-", dir=directory)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_db(path) -> SpeakerDb:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid database JSON: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise SchemaVersionMismatchError("missing version field")
    if doc["version"] != DB_SCHEMA_VERSION:
        raise SchemaVersionMismatchError(f"unsupported version {doc['version']!r}")
    try:
        db = SpeakerDb()
        for spk in doc["speakers"]:
            entries = []
            for entry in spk["entries"]:
                values = np.array(entry["embedding"], dtype=np.float32)
                entries.append(
                    DbEntry(
                        Embedding(values, 0.0),
                        entry["created_at"],
                    )
                )
            db.speakers[spk["name"]] = entries
        return db
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed database document: {exc}") from exc
