"""HTTP/JSON identification service with a live server-sent event stream.

Single-writer concurrency: identify requests are independent reads;
enrollment (and pending-entry consumption) serializes through one lock.
The event log is append-only with strictly increasing sequence numbers
and bounded replay for reconnecting clients.
"""

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from . import dsp
from .embed import embed_audio
from .errors import VoiceIdError
from .identify import SpeakerDb, enroll, identify, save_db
from .net import EmbeddingNet

MAX_BODY_BYTES = 10 * 1024 * 1024


@dataclass
class ServiceConfig:
    crop_len_s: float = 0.5
    auto_update: bool = False
    pending_ttl_s: float = 300.0
    event_log_size: int = 1000


class EventLog:
    """Append-only bounded event log with blocking replay."""

    def __init__(self, maxlen: int = 1000):
        self._events = []
        self._maxlen = maxlen
        self._seq = 0
        self._cond = threading.Condition()

    def append(self, event_type: str, payload: dict) -> dict:
        with self._cond:
            self._seq += 1
            event = {
                "seq": self._seq,
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "type": event_type,
                **payload,
            }
            self._events.append(event)
            if len(self._events) > self._maxlen:
                del self._events[: len(self._events) - self._maxlen]
            self._cond.notify_all()
            return event

    def since(self, last_seen: int) -> list:
        with self._cond:
            return [e for e in self._events if e["seq"] > last_seen]

    def wait_since(self, last_seen: int, timeout: float) -> list:
        with self._cond:
            events = [e for e in self._events if e["seq"] > last_seen]
            if events:
                return events
            self._cond.wait(timeout)
            return [e for e in self._events if e["seq"] > last_seen]


@dataclass
class ServiceState:
    net: EmbeddingNet
    db: SpeakerDb
    cfg: ServiceConfig
    db_path: str | None = None
    pending: dict = field(default_factory=dict)  # id -> (embedding, expires_at)
    events: EventLog = None
    write_lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        if self.events is None:
            self.events = EventLog(self.cfg.event_log_size)

    def prune_pending(self, now=None):
        now = time.monotonic() if now is None else now
        for pid in [p for p, (_, exp) in self.pending.items() if exp <= now]:
            del self.pending[pid]

    def persist(self):
        if self.db_path:
            save_db(self.db, self.db_path)


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="voiceid")
    app.state.service = state

    @app.post("/api/identify")
    async def api_identify(request: Request, crop: float | None = None):
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            return JSONResponse({"error": "body too large"}, status_code=413)
        if len(state.db) == 0:
            return JSONResponse(
                {"error": "database is empty; enroll a speaker first"},
                status_code=409,
            )
        try:
            seg = dsp.load_wav(body)
            emb = embed_audio(state.net, seg, crop or state.cfg.crop_len_s)
        except VoiceIdError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        result = identify(emb, state.db)
        scores = {k: float(v) for k, v in result.scores.items()}
        payload = {"decision": result.decision, "speaker": result.speaker, "scores": scores}
        with state.write_lock:
            state.prune_pending()
            if result.decision == "unknown":
                pid = uuid.uuid4().hex
                state.pending[pid] = (emb, time.monotonic() + state.cfg.pending_ttl_s)
                payload["pending_id"] = pid
            elif state.cfg.auto_update:
                enroll(state.db, result.speaker, emb)
                state.persist()
            state.events.append("identification", payload)
        return payload

    @app.post("/api/enroll")
    async def api_enroll(request: Request, name: str | None = None):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("application/json"):
            try:
                doc = json.loads(await request.body())
            except json.JSONDecodeError:
                return JSONResponse({"error": "invalid JSON body"}, status_code=400)
            name = doc.get("name")
            pid = doc.get("pending_id")
            if not isinstance(name, str) or not name.strip():
                return JSONResponse({"error": "invalid name"}, status_code=400)
            with state.write_lock:
                state.prune_pending()
                if pid not in state.pending:
                    return JSONResponse(
                        {"error": "unknown or expired pending_id"}, status_code=404
                    )
                emb, _ = state.pending.pop(pid)  # single use
                enroll(state.db, name, emb)
                state.persist()
                entry_count = state.db.entry_count(name)
                state.events.append(
                    "enrollment", {"speaker": name, "entry_count": entry_count}
                )
            return {"speaker": name, "entry_count": entry_count}
        # direct enrollment from audio bytes
        if not name or not name.strip():
            return JSONResponse({"error": "invalid name"}, status_code=400)
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            return JSONResponse({"error": "body too large"}, status_code=413)
        try:
            seg = dsp.load_wav(body)
            emb = embed_audio(state.net, seg, state.cfg.crop_len_s)
        except VoiceIdError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        with state.write_lock:
            enroll(state.db, name, emb)
            state.persist()
            entry_count = state.db.entry_count(name)
            state.events.append(
                "enrollment", {"speaker": name, "entry_count": entry_count}
            )
        return {"speaker": name, "entry_count": entry_count}

    @app.get("/api/speakers")
    def api_speakers():
        return [
            {
                "name": name,
                "entry_count": len(entries),
                "enrolled_at": entries[0].created_at if entries else None,
            }
            for name, entries in state.db.speakers.items()
        ]

    @app.get("/api/events")
    def api_events(request: Request, last_seen: int = 0, limit: int = 0):
        header_id = request.headers.get("last-event-id")
        cursor = int(header_id) if header_id else last_seen

        def stream(cursor=cursor):
            sent = 0
            while True:
                events = state.events.wait_since(cursor, timeout=1.0)
                if not events:
                    yield ": keepalive\n\n"
                    continue
                for event in events:
                    cursor = event["seq"]
                    yield f"id: {event['seq']}\ndata: {json.dumps(event)}\n\n"
                    sent += 1
                    if limit and sent >= limit:
                        return

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
