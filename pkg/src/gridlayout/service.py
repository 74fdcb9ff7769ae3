"""WebSocket transport around :class:`gridlayout.session.Session`.

One session per connection.  A receive task queues client messages; the pump
task drains the queue (coalescing bursts of drag_move to the latest one),
lets the session take a solver step, and sends any produced events.  The
snapshot rate is capped; an idle converged session sends nothing.

Run with ``uvicorn gridlayout.service:app`` or ``python -m gridlayout.service``.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from gridlayout.session import Session

SNAPSHOT_INTERVAL = 1.0 / 60.0

app = FastAPI(title="gridlayout")


def _coalesce(messages: list[dict]) -> list[dict]:
    """Keep only the last drag_move of any uninterrupted run of drag_moves."""
    out: list[dict] = []
    for msg in messages:
        if out and msg.get("t") == "drag_move" and out[-1].get("t") == "drag_move":
            out[-1] = msg
        else:
            out.append(msg)
    return out


async def _pump(ws: WebSocket, session: Session, queue: asyncio.Queue) -> None:
    while True:
        batch: list[dict] = []
        if session.converged:
            batch.append(await queue.get())
        while not queue.empty():
            batch.append(queue.get_nowait())
        for msg in _coalesce(batch):
            for event in session.handle_message(msg):
                await ws.send_text(json.dumps(event))
        for event in session.step():
            await ws.send_text(json.dumps(event))
        await asyncio.sleep(SNAPSHOT_INTERVAL)


@app.websocket("/ws")
async def ws_endpoint(ws: WebSocket) -> None:
    await ws.accept()
    session = Session()
    queue: asyncio.Queue = asyncio.Queue()
    pump = asyncio.create_task(_pump(ws, session, queue))
    try:
        while True:
            raw = await ws.receive_text()
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                await ws.send_text(json.dumps({"t": "error", "msg": "invalid JSON"}))
                continue
            await queue.put(msg)
    except WebSocketDisconnect:
        pass
    finally:
        pump.cancel()


_static = Path(__file__).resolve().parents[2] / "frontend" / "dist"
if _static.is_dir():
    app.mount("/", StaticFiles(directory=_static, html=True), name="ui")


def main() -> None:
    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=8000)


if __name__ == "__main__":
    main()
