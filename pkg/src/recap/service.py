"""HTTP service: transcript ingestion, recap retrieval, feedback, exports.

Writes are serialized per meeting (single-writer contract) and guarded by
optimistic concurrency: events carry the document version they were made
against, and stale writers get 409 with the current version. Raw
transcript text is only served to the meeting owner.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from . import feedback as fb
from .backend import BackendPolicy, HttpBackend, StubBackend
from .config import AppConfig
from .pipeline import PipelineConfig, run_pipeline
from .recapdoc import (
    DEPTH_FULL,
    NodeNotFound,
    document_to_json,
    render_markdown,
    share_extract,
)
from .store import (
    STATUS_FAILED,
    STATUS_PENDING,
    STATUS_READY,
    FileStore,
    MeetingMeta,
    MeetingStore,
    MemoryStore,
    UnknownMeeting,
)
from .transcript import EmptyTranscript, MalformedInput, parse_transcript

logger = logging.getLogger(__name__)

_FORMAT_ALIASES = {"plain": "plain_speaker", "srt": "srt", "vtt": "webvtt"}

ANONYMOUS = "anonymous"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class ServiceState:
    config: AppConfig
    store: MeetingStore
    backend: object
    pipeline_config: PipelineConfig
    locks: dict[str, threading.Lock] = field(default_factory=dict)
    locks_guard: threading.Lock = field(default_factory=threading.Lock)

    def meeting_lock(self, meeting_id: str) -> threading.Lock:
        with self.locks_guard:
            return self.locks.setdefault(meeting_id, threading.Lock())


def _build_backend(config: AppConfig):
    if config.backend_kind == "http":
        return HttpBackend(config.backend_policy)
    return StubBackend()


def create_app(
    config: AppConfig | None = None,
    store: MeetingStore | None = None,
    backend=None,
) -> FastAPI:
    config = config or AppConfig()
    if store is None:
        store = FileStore(config.data_dir) if config.data_dir else MemoryStore()
    state = ServiceState(
        config=config,
        store=store,
        backend=backend if backend is not None else _build_backend(config),
        pipeline_config=config.pipeline,
    )
    app = FastAPI(title="recap service", version="1")
    app.state.recap = state

    def actor_of(request: Request) -> str:
        return request.headers.get("X-Actor", ANONYMOUS)

    def auth_error(request: Request) -> JSONResponse | None:
        if config.auth_token is None:
            return None
        header = request.headers.get("Authorization", "")
        if header == f"Bearer {config.auth_token}":
            return None
        return JSONResponse({"error": "unauthorized"}, status_code=401)

    def generate(meeting_id: str) -> None:
        try:
            transcript = state.store.get_transcript(meeting_id)
            doc = run_pipeline(
                transcript, state.backend, state.pipeline_config, created_at=_now()
            )
            state.store.save_initial_document(meeting_id, doc)
            state.store.save_document(meeting_id, doc)
            state.store.set_status(meeting_id, STATUS_READY)
        except Exception:
            logger.exception("pipeline failed for meeting %s", meeting_id)
            state.store.set_status(meeting_id, STATUS_FAILED)

    @app.post("/v1/meetings")
    async def create_meeting(request: Request):
        if err := auth_error(request):
            return err
        body = await request.body()
        if len(body) > config.max_body_bytes:
            return JSONResponse({"error": "body too large"}, status_code=413)
        fmt = request.query_params.get("format")
        if fmt is not None:
            if fmt not in _FORMAT_ALIASES:
                return JSONResponse({"error": f"unknown format {fmt!r}"}, status_code=400)
            fmt = _FORMAT_ALIASES[fmt]
        meeting_id = uuid.uuid4().hex
        try:
            transcript = parse_transcript(body, format_hint=fmt, meeting_id=meeting_id)
        except EmptyTranscript as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        except MalformedInput as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        meta = MeetingMeta(
            meeting_id=meeting_id,
            owner=actor_of(request),
            created_at=_now(),
            status=STATUS_PENDING,
        )
        state.store.create_meeting(meta, transcript)
        if len(transcript) < config.sync_utterance_cutoff:
            generate(meeting_id)
            status = state.store.get_meta(meeting_id).status
            if status == STATUS_FAILED:
                return JSONResponse({"error": "pipeline failed"}, status_code=500)
            return JSONResponse({"meeting_id": meeting_id}, status_code=201)
        threading.Thread(target=generate, args=(meeting_id,), daemon=True).start()
        return JSONResponse({"meeting_id": meeting_id, "status": STATUS_PENDING}, status_code=202)

    @app.get("/v1/meetings/{meeting_id}/status")
    def meeting_status(meeting_id: str, request: Request):
        if err := auth_error(request):
            return err
        try:
            meta = state.store.get_meta(meeting_id)
        except UnknownMeeting:
            return JSONResponse({"error": "unknown meeting"}, status_code=404)
        return {"meeting_id": meeting_id, "status": meta.status}

    def _ready_document(meeting_id: str):
        meta = state.store.get_meta(meeting_id)
        if meta.status != STATUS_READY:
            return None, JSONResponse(
                {"error": f"recap not ready (status {meta.status})"}, status_code=409
            )
        return state.store.load_document(meeting_id), None

    @app.get("/v1/meetings/{meeting_id}/recap")
    def get_recap(meeting_id: str, request: Request, view: str = "both"):
        if err := auth_error(request):
            return err
        if view not in ("highlights", "hierarchical", "both"):
            return JSONResponse({"error": f"unknown view {view!r}"}, status_code=400)
        try:
            doc, not_ready = _ready_document(meeting_id)
        except UnknownMeeting:
            return JSONResponse({"error": "unknown meeting"}, status_code=404)
        if not_ready is not None:
            return not_ready
        etag = f'"{doc.version}"'
        if request.headers.get("If-None-Match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        projection = document_to_json(doc)
        if view == "highlights":
            projection.pop("chapters")
        elif view == "hierarchical":
            projection.pop("highlights")
        return JSONResponse(projection, headers={"ETag": etag})

    @app.post("/v1/meetings/{meeting_id}/events")
    def post_event(meeting_id: str, request: Request, body: dict):
        if err := auth_error(request):
            return err
        try:
            state.store.get_meta(meeting_id)
        except UnknownMeeting:
            return JSONResponse({"error": "unknown meeting"}, status_code=404)
        actor = actor_of(request)
        if body.get("actor") and body["actor"] != actor:
            return JSONResponse({"error": "actor mismatch"}, status_code=403)
        try:
            event = fb.FeedbackEvent(
                event_id=body.get("event_id") or uuid.uuid4().hex,
                meeting_id=meeting_id,
                actor=actor,
                at=body.get("at") or _now(),
                base_version=int(body["base_version"]),
                action=body["action"],
                payload=body.get("payload", {}),
                delete_reason=body.get("delete_reason"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            return JSONResponse({"error": f"bad event: {exc}"}, status_code=400)
        lock = state.meeting_lock(meeting_id)
        with lock:
            try:
                doc, not_ready = _ready_document(meeting_id)
                if not_ready is not None:
                    return not_ready
                new_doc = fb.apply(doc, event)
            except fb.StaleVersion as exc:
                current = state.store.load_document(meeting_id).version
                return JSONResponse(
                    {"error": str(exc), "current_version": current}, status_code=409
                )
            except (fb.ValidationFailure, fb.IllegalAction, NodeNotFound, ValueError) as exc:
                return JSONResponse({"error": str(exc)}, status_code=400)
            state.store.append_event(meeting_id, fb.normalize(event))
            state.store.save_document(meeting_id, new_doc)
        return {"meeting_id": meeting_id, "new_version": new_doc.version}

    @app.get("/v1/meetings/{meeting_id}/export/training")
    def export_training(meeting_id: str, request: Request):
        if err := auth_error(request):
            return err
        try:
            doc, not_ready = _ready_document(meeting_id)
            meta = state.store.get_meta(meeting_id)
        except UnknownMeeting:
            return JSONResponse({"error": "unknown meeting"}, status_code=404)
        if not_ready is not None:
            return not_ready
        # Training examples quote raw transcript context; owner only.
        if actor_of(request) != meta.owner:
            return JSONResponse({"error": "owner credential required"}, status_code=403)
        events = state.store.events(meeting_id)
        transcript = state.store.get_transcript(meeting_id)
        initial = state.store.load_initial_document(meeting_id)
        examples = fb.export_training(initial, events, transcript, config.training_weights)
        lines = "".join(json.dumps(ex.to_json(), sort_keys=True) + "\n" for ex in examples)
        return PlainTextResponse(lines, media_type="application/x-ndjson")

    @app.get("/v1/meetings/{meeting_id}/export/markdown")
    def export_markdown(
        meeting_id: str,
        request: Request,
        node: str | None = None,
        depth: str = "notes",
        view: str = "both",
    ):
        if err := auth_error(request):
            return err
        try:
            doc, not_ready = _ready_document(meeting_id)
            meta = state.store.get_meta(meeting_id)
        except UnknownMeeting:
            return JSONResponse({"error": "unknown meeting"}, status_code=404)
        if not_ready is not None:
            return not_ready
        transcript = state.store.get_transcript(meeting_id)
        if node is None:
            return PlainTextResponse(render_markdown(doc, view=view), media_type="text/markdown")
        includes_raw_dialogue = depth == DEPTH_FULL and doc.find_note(node) is not None
        if includes_raw_dialogue and actor_of(request) != meta.owner:
            return JSONResponse({"error": "owner credential required"}, status_code=403)
        try:
            extract = share_extract(
                doc,
                node,
                depth,
                transcript=transcript if includes_raw_dialogue else None,
                created_by=actor_of(request),
                created_at=_now(),
            )
        except NodeNotFound:
            return JSONResponse({"error": f"unknown node {node!r}"}, status_code=404)
        except ValueError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return PlainTextResponse(extract.rendered, media_type="text/markdown")

    @app.get("/v1/meetings/{meeting_id}/utterances")
    def get_utterances(meeting_id: str, request: Request, start: int = 0, end: int | None = None):
        if err := auth_error(request):
            return err
        try:
            meta = state.store.get_meta(meeting_id)
        except UnknownMeeting:
            return JSONResponse({"error": "unknown meeting"}, status_code=404)
        if actor_of(request) != meta.owner:
            return JSONResponse({"error": "owner credential required"}, status_code=403)
        transcript = state.store.get_transcript(meeting_id)
        n = len(transcript)
        end = n - 1 if end is None else min(end, n - 1)
        if start < 0 or start > end:
            return JSONResponse({"error": "invalid range"}, status_code=400)
        return {
            "meeting_id": meeting_id,
            "utterances": [
                {
                    "index": u.index,
                    "speaker": u.speaker,
                    "start": u.start,
                    "end": u.end,
                    "text": u.text,
                }
                for u in transcript.utterances[start : end + 1]
            ],
        }

    return app


def default_app() -> FastAPI:
    import os

    from .config import load_config

    config_path = os.environ.get("RECAP_CONFIG")
    config = load_config(config_path)
    data_dir = os.environ.get("RECAP_DATA_DIR", config.data_dir)
    if data_dir != config.data_dir:
        from dataclasses import replace

        config = replace(config, data_dir=data_dir)
    return create_app(config)
