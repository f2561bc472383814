"""HTTP gateway over the session store, plus a per-session push channel.

Mutating endpoints require a client idempotency token; replaying a token
returns the original response bytes without re-applying the operation.
Protocol rejections come back as structured 409 payloads carrying the
stable violation codes, never as transport failures.
"""

from __future__ import annotations

import asyncio
import json
import threading

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from pydantic import BaseModel, Field

from .lang import FormulaSyntaxError
from .locutions import LABELS, LocutionKind
from .session import SessionError, SessionStore, move_from_wire


class CreateBody(BaseModel):
    config: dict = Field(default_factory=dict)
    token: str


class JoinBody(BaseModel):
    display_name: str
    role: str = "participant"
    token: str


class TurnBody(BaseModel):
    speaker: str
    moves: list[dict]
    token: str


_ERROR_STATUS = {
    "NOT_FOUND": 404,
    "INVALID_CONFIG": 400,
    "SCHEMA": 400,
}


def _json_response(payload: dict, status: int = 200) -> Response:
    body = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return Response(content=body, status_code=status, media_type="application/json")


def create_app(store: SessionStore | None = None) -> FastAPI:
    store = store or SessionStore()
    app = FastAPI(title="edg", docs_url=None, redoc_url=None)
    app.state.store = store
    # the browser client is served from its own origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    replies_cache: dict[str, Response] = {}
    cache_lock = threading.Lock()

    def idempotent(token: str, build) -> Response:
        with cache_lock:
            cached = replies_cache.get(token)
        if cached is not None:
            return cached
        response = build()
        with cache_lock:
            # first writer wins so duplicates stay byte-identical
            return replies_cache.setdefault(token, response)

    def error_response(exc: SessionError) -> Response:
        status = _ERROR_STATUS.get(exc.code, 409)
        return _json_response({"error": {"code": exc.code, "message": str(exc)}}, status)

    @app.post("/sessions")
    def create_session(body: CreateBody) -> Response:
        def build() -> Response:
            try:
                sid = store.create(body.config)
            except SessionError as exc:
                return error_response(exc)
            return _json_response({"session": sid})

        return idempotent(body.token, build)

    @app.post("/sessions/{sid}/join")
    def join(sid: str, body: JoinBody) -> Response:
        def build() -> Response:
            try:
                participant = store.join(sid, body.display_name, body.role)
                session = store.get(sid)
                position = session.names.index(participant)
                started = session.started
            except SessionError as exc:
                return error_response(exc)
            return _json_response(
                {"participant": participant, "position": position, "started": started}
            )

        return idempotent(body.token, build)

    @app.post("/sessions/{sid}/turns")
    def submit_turn(sid: str, body: TurnBody) -> Response:
        def build() -> Response:
            try:
                moves = [move_from_wire(raw) for raw in body.moves]
            except (SessionError, FormulaSyntaxError) as exc:
                return _json_response(
                    {"error": {"code": "SCHEMA", "message": str(exc)}}, 400
                )
            try:
                accepted, violations = store.submit_turn(sid, body.speaker, moves)
            except SessionError as exc:
                return error_response(exc)
            if not accepted:
                return _json_response(
                    {
                        "accepted": False,
                        "violations": [
                            {"code": v.code, "message": v.message, "move_index": v.move_index}
                            for v in violations
                        ],
                    },
                    409,
                )
            return _json_response({"accepted": True, "snapshot": store.snapshot(sid)})

        return idempotent(body.token, build)

    @app.get("/sessions/{sid}/snapshot")
    def snapshot(sid: str) -> Response:
        try:
            return _json_response(store.snapshot(sid))
        except SessionError as exc:
            return error_response(exc)

    @app.get("/sessions/{sid}/replies")
    def replies(sid: str, target: int) -> Response:
        try:
            return _json_response(store.legal_replies(sid, target))
        except SessionError as exc:
            return error_response(exc)

    @app.get("/sessions/{sid}/events.json")
    def events_poll(sid: str, after: int = -1) -> Response:
        try:
            events = store.events_since(sid, after)
        except SessionError as exc:
            return error_response(exc)
        return _json_response({"events": [e.to_wire() for e in events]})

    @app.get("/labels")
    def labels() -> Response:
        return _json_response({kind.value: LABELS[kind] for kind in LocutionKind})

    @app.websocket("/sessions/{sid}/events")
    async def events_push(ws: WebSocket, sid: str, after: int = -1):
        await ws.accept()
        try:
            store.get(sid)
        except SessionError:
            await ws.send_text(json.dumps({"error": {"code": "NOT_FOUND"}}))
            await ws.close()
            return
        last = after
        try:
            while True:
                events = store.events_since(sid, last)
                closed = False
                for event in events:
                    await ws.send_text(json.dumps(event.to_wire(), sort_keys=True))
                    last = event.seq
                    closed = closed or event.kind == "Closed"
                if closed:
                    await ws.close()
                    return
                await asyncio.sleep(0.05)
        except WebSocketDisconnect:
            return

    @app.get("/health", response_model=None)
    def health(_: Request) -> Response:
        return _json_response({"ok": True})

    return app
