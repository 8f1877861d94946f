"""The HTTP/websocket service boundary.

Bearer-token auth on everything except the health check. Ingestion and
queries are plain JSON over HTTP; per-session envelopes stream over a
``breakout.v1`` websocket with a bounded buffer per subscriber.
"""

from __future__ import annotations

import asyncio
import json
import threading

from fastapi import Body, Depends, FastAPI, HTTPException, Query, Request, WebSocket
from fastapi.responses import JSONResponse, Response
from starlette.websockets import WebSocketDisconnect

from .service import (
    DuplicateJoin,
    InvalidConfig,
    MalformedBatch,
    MeetingService,
    NotJoined,
    TooManyParticipants,
)
from .store import SessionClosed, UnknownSession

SUBPROTOCOL = "breakout.v1"
WS_BUFFER = 1024

_CLOSE = object()  # queue sentinel: stop sending and close the socket


class StreamSubscriber:
    """Per-socket envelope buffer bridging worker threads to the event loop.

    ``offer`` is called from ingestion/tick threads under the session lock;
    it must never block, so the bound is enforced with a pending counter and
    overflow marks the subscriber dead for the fan-out loop to drop.
    """

    def __init__(self, ws: WebSocket, loop: asyncio.AbstractEventLoop, capacity: int = WS_BUFFER):
        self.ws = ws
        self.loop = loop
        self.capacity = capacity
        self.queue: asyncio.Queue = asyncio.Queue()
        self.dead = False
        self.close_code = 1000
        self.close_reason = ""
        self._pending = 0
        self._lock = threading.Lock()

    def offer(self, envelope: dict) -> bool:
        with self._lock:
            if self.dead:
                return False
            if self._pending >= self.capacity:
                self.dead = True
                return False
            self._pending += 1
        self.loop.call_soon_threadsafe(self.queue.put_nowait, envelope)
        return True

    def consumed(self) -> None:
        with self._lock:
            self._pending -= 1

    def request_close(self, code: int, reason: str) -> None:
        with self._lock:
            self.dead = True
            self.close_code = code
            self.close_reason = reason
        self.loop.call_soon_threadsafe(self.queue.put_nowait, _CLOSE)
        # Interrupt a send blocked on an unread socket as well.
        self.loop.call_soon_threadsafe(self._spawn_force_close)

    def _spawn_force_close(self) -> None:
        async def _close() -> None:
            try:
                await self.ws.close(self.close_code, self.close_reason)
            except Exception:
                pass

        self.loop.create_task(_close())


def create_app(service: MeetingService, token: str, ws_buffer: int = WS_BUFFER) -> FastAPI:
    app = FastAPI(title="breakout", docs_url=None, redoc_url=None)
    app.state.service = service

    async def require_token(request: Request) -> None:
        if request.headers.get("Authorization") != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="unauthorized")

    authed = [Depends(require_token)]

    def _error(status: int):
        def handler(request: Request, exc: Exception) -> JSONResponse:
            return JSONResponse(status_code=status, content={"detail": str(exc) or exc.__class__.__name__})

        return handler

    app.add_exception_handler(UnknownSession, _error(404))
    app.add_exception_handler(SessionClosed, _error(409))
    app.add_exception_handler(DuplicateJoin, _error(409))
    app.add_exception_handler(NotJoined, _error(409))
    app.add_exception_handler(TooManyParticipants, _error(422))
    app.add_exception_handler(MalformedBatch, _error(422))
    app.add_exception_handler(ValueError, _error(422))
    app.add_exception_handler(OSError, _error(503))  # storage failure

    def invalid_config(request: Request, exc: InvalidConfig) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": "invalid config", "violations": exc.violations})

    app.add_exception_handler(InvalidConfig, invalid_config)

    @app.get("/v1/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/v1/sessions", status_code=201, dependencies=authed)
    def create_session(payload: dict | None = Body(default=None)) -> dict:
        payload = payload or {}
        for key in ("segmenter", "analytics"):
            if key in payload and not isinstance(payload[key], dict):
                raise InvalidConfig([f"{key} must be an object"])
        sid = service.create_session(
            segmenter=payload.get("segmenter"),
            analytics=payload.get("analytics"),
            session_id=payload.get("session_id"),
        )
        return {"session_id": sid}

    @app.post("/v1/sessions/{sid}/participants", status_code=204, dependencies=authed)
    def join(sid: str, payload: dict = Body(...)) -> Response:
        pid = payload.get("participant_id")
        if not isinstance(pid, str):
            raise MalformedBatch("participant_id is required")
        service.join(sid, pid)
        return Response(status_code=204)

    @app.delete("/v1/sessions/{sid}/participants/{pid}", status_code=204, dependencies=authed)
    def leave(sid: str, pid: str) -> Response:
        service.leave(sid, pid)
        return Response(status_code=204)

    @app.post("/v1/sessions/{sid}/samples", dependencies=authed)
    def ingest(sid: str, payload: dict = Body(...)) -> dict:
        samples = payload.get("samples")
        if samples is None:
            raise MalformedBatch("samples is required")
        accepted, dropped = service.ingest(sid, samples)
        return {"accepted": accepted, "dropped": dropped}

    @app.delete("/v1/sessions/{sid}", status_code=204, dependencies=authed)
    def close(sid: str) -> Response:
        service.close_session(sid)
        return Response(status_code=204)

    @app.get("/v1/sessions/{sid}/stats", dependencies=authed)
    def stats(sid: str) -> Response:
        return _json(service.latest_stats(sid))

    @app.get("/v1/sessions/{sid}/mediator", dependencies=authed)
    def mediator(sid: str) -> Response:
        return _json(service.latest_frame(sid))

    @app.get("/v1/sessions/{sid}/segments", dependencies=authed)
    def segments(
        sid: str,
        from_t: int = Query(alias="from"),
        to_t: int = Query(alias="to"),
    ) -> Response:
        segs = service.query_segments(sid, from_t, to_t)
        return _json([s.to_dict() for s in segs])

    @app.websocket("/v1/sessions/{sid}/stream")
    async def stream(ws: WebSocket, sid: str) -> None:
        offered = ws.scope.get("subprotocols") or []
        await ws.accept(subprotocol=SUBPROTOCOL if SUBPROTOCOL in offered else None)

        supplied = ws.query_params.get("token") or _bearer(ws.headers.get("Authorization"))
        if supplied != token:
            await ws.close(code=1008, reason="unauthorized")
            return
        if not service.session_exists(sid):
            await ws.close(code=1008, reason="unknown session")
            return

        sub = StreamSubscriber(ws, asyncio.get_running_loop(), capacity=ws_buffer)
        try:
            service.subscribe(sid, sub)
        except SessionClosed:
            await ws.close(code=1008, reason="session closed")
            return
        try:
            while True:
                item = await sub.queue.get()
                if item is _CLOSE:
                    break
                await ws.send_text(json.dumps(item, separators=(",", ":"), sort_keys=True))
                sub.consumed()
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            service.unsubscribe(sid, sub)
            try:
                await ws.close(code=sub.close_code, reason=sub.close_reason)
            except Exception:
                pass

    return app


def _bearer(header: str | None) -> str | None:
    if header and header.startswith("Bearer "):
        return header[len("Bearer ") :]
    return None


def _json(payload: object) -> Response:
    return Response(content=json.dumps(payload, separators=(",", ":"), sort_keys=True), media_type="application/json")
