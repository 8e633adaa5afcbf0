"""HTTP front end for the hub: publish, poll, acknowledge, push stream.

Endpoints:

* `GET /healthz`: liveness plus the current log length.
* `POST /messages`: publish one message; 201 on first publish, 200 when
  the msg_id was already in the log (idempotent retry).
* `POST /alerts/{alert_id}/ack`: route a caregiver acknowledgment; 404
  when no AlertRaised carries that alert id.
* `GET /messages?after=<seq>&kinds=A,B&limit=n`: poll the log past a
  cursor, oldest first; the response carries the next cursor.
* `GET /stream?after=<seq>&kinds=A,B`: server-sent events push channel;
  each event's id is the message's sequence number, and a reconnect with
  the standard Last-Event-ID header resumes from there.

When the server is started with a client token, every endpoint except
/healthz requires it in the `x-client-token` header.
"""

from __future__ import annotations

import asyncio
import json

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .hub import (
    AlertNotFound,
    CloudHub,
    HubMessage,
    MessageKind,
    PublishError,
    message_to_record,
)

#: Seconds between polls of the log inside the stream loop.
STREAM_POLL_INTERVAL = 0.05

#: Idle poll loops between keepalive comments.
KEEPALIVE_LOOPS = 100


class PublishBody(BaseModel):
    msg_id: str
    kind: str
    device_id: str
    payload: dict
    published_at: int


class AckBody(BaseModel):
    caregiver_id: str


def _parse_kinds(text: str | None) -> list[MessageKind] | None:
    if text is None or text == "":
        return None
    try:
        return [MessageKind.parse(part) for part in text.split(",")]
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


def create_app(hub: CloudHub, client_token: str | None = None) -> FastAPI:
    """Build the service around an existing hub instance."""
    app = FastAPI(title="fruitpal hub", docs_url=None, redoc_url=None)

    async def require_token(request: Request) -> None:
        if client_token is None:
            return
        if request.headers.get("x-client-token") != client_token:
            raise HTTPException(status_code=401, detail="missing or wrong client token")

    guarded = [Depends(require_token)]

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "messages": len(hub.log_entries())}

    @app.post("/messages", dependencies=guarded)
    def publish(body: PublishBody) -> JSONResponse:
        try:
            kind = MessageKind.parse(body.kind)
            duplicate = hub.get_by_msg_id(body.msg_id) is not None
            receipt = hub.publish(
                HubMessage(
                    msg_id=body.msg_id,
                    kind=kind,
                    device_id=body.device_id,
                    payload=body.payload,
                    published_at=body.published_at,
                )
            )
        except (PublishError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return JSONResponse(
            status_code=200 if duplicate else 201,
            content={
                "msg_id": receipt.msg_id,
                "seq": receipt.seq,
                "delivered_to": receipt.delivered_to,
                "duplicate": duplicate,
            },
        )

    @app.post("/alerts/{alert_id}/ack", dependencies=guarded)
    def ack(alert_id: str, body: AckBody) -> dict:
        try:
            receipt = hub.acknowledge(alert_id, body.caregiver_id)
        except AlertNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except (PublishError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {"msg_id": receipt.msg_id, "seq": receipt.seq}

    @app.get("/messages", dependencies=guarded)
    def poll(
        after: int = Query(default=0, ge=0),
        kinds: str | None = None,
        device_id: str | None = None,
        limit: int | None = Query(default=None, ge=1, le=1000),
    ) -> dict:
        entries = hub.messages_after(
            after, kinds=_parse_kinds(kinds), device_id=device_id, limit=limit
        )
        cursor = entries[-1][0] if entries else after
        return {
            "messages": [message_to_record(seq, msg) for seq, msg in entries],
            "cursor": cursor,
        }

    @app.get("/stream", dependencies=guarded)
    async def stream(
        request: Request,
        after: int = Query(default=0, ge=0),
        kinds: str | None = None,
    ) -> StreamingResponse:
        wanted = _parse_kinds(kinds)
        last_event_id = request.headers.get("last-event-id")
        cursor = int(last_event_id) if last_event_id else after

        async def events():
            position = cursor
            idle = 0
            yield "retry: 1000\n\n"
            while True:
                if await request.is_disconnected():
                    return
                entries = hub.messages_after(position, kinds=wanted)
                for seq, msg in entries:
                    position = seq
                    data = json.dumps(message_to_record(seq, msg), sort_keys=True)
                    yield f"id: {seq}\nevent: message\ndata: {data}\n\n"
                if entries:
                    idle = 0
                else:
                    idle += 1
                    if idle >= KEEPALIVE_LOOPS:
                        idle = 0
                        yield ": keepalive\n\n"
                await asyncio.sleep(STREAM_POLL_INTERVAL)

        return StreamingResponse(
            events(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    return app


def serve(
    hub: CloudHub,
    host: str = "127.0.0.1",
    port: int = 8787,
    client_token: str | None = None,
) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(hub, client_token), host=host, port=port, log_level="warning")
