"""HTTP gateway: sessions, taps, frame ingestion, reports.

Thin glue over the engine and the detector. Protocol state advances
only through the engine; every mutation lands in the per-session log
before the response goes out, so a restarted service replays to the
same state. Per-session requests serialize on a lock (single-writer
contract); distinct sessions run concurrently.

The report endpoint returns the canonical report bytes produced by
``assessment.report_json``, the same serializer library callers use.
"""

from __future__ import annotations

import io
import json
import os
import threading

import numpy as np
from fastapi import FastAPI, Request, Response
from PIL import Image as PILImage

from .assessment import (
    ErrorMode,
    build_report,
    count_perceived_errors,
    expected_multisets,
    report_json,
)
from .blocks import PipelineConfig, analyze_frame
from .errors import DomainError, InvalidConfig, OutOfOrderTimestamp, TapInPhase
from .netpbm import ppm_from_bytes
from .session import (
    Phase,
    SessionConfig,
    create_session,
    current_instruction,
    finalize_session,
    record_tap,
)
from .storage import SessionStore, fill_missing_frames

DEFAULT_DATA_DIR = "blockvision-data"


def _json_error(status: int, error: str, detail: str) -> Response:
    return Response(
        content=json.dumps({"error": error, "detail": detail}),
        status_code=status,
        media_type="application/json",
    )


def _decode_frame(data: bytes) -> np.ndarray | None:
    if data.startswith(b"P6"):
        try:
            return ppm_from_bytes(data)
        except ValueError:
            return None
    if data.startswith(b"\x89PNG"):
        try:
            return np.asarray(PILImage.open(io.BytesIO(data)).convert("RGB"))
        except Exception:
            return None
    return None


def create_app(
    store: SessionStore | None = None,
    pipeline: PipelineConfig = PipelineConfig(),
    error_mode: ErrorMode = ErrorMode.CUMULATIVE_LEGACY,
) -> FastAPI:
    if store is None:
        store = SessionStore(os.environ.get("BLOCKVISION_DATA", DEFAULT_DATA_DIR))

    app = FastAPI(title="blockvision")
    sessions: dict[str, tuple] = {}  # sid -> [state, events]
    locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    def session_lock(sid: str) -> threading.Lock:
        with registry_lock:
            if sid not in locks:
                locks[sid] = threading.Lock()
            return locks[sid]

    def get_session(sid: str):
        if sid not in sessions:
            if not store.exists(sid):
                return None
            state, events = store.load_state(sid)
            sessions[sid] = [state, events]
        return sessions[sid]

    @app.post("/sessions", status_code=201)
    async def create(request: Request):
        body = await request.body()
        try:
            payload = json.loads(body) if body else {}
        except json.JSONDecodeError:
            return _json_error(400, "InvalidConfig", "body is not JSON")
        try:
            config = SessionConfig.from_dict(payload)
        except InvalidConfig as exc:
            return _json_error(400, "InvalidConfig", str(exc))
        sid = store.create(config)
        state = create_session(config)
        with registry_lock:
            sessions[sid] = [state, []]
        return {
            "sessionId": sid,
            "instruction": current_instruction(state).to_dict(),
        }

    @app.post("/sessions/{sid}/tap")
    async def tap(sid: str, request: Request):
        try:
            payload = json.loads(await request.body())
            timestamp = int(payload["timestamp"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            return _json_error(422, "BadRequest", "body must be {\"timestamp\": ms}")
        with session_lock(sid):
            entry = get_session(sid)
            if entry is None:
                return _json_error(404, "UnknownSession", sid)
            state, events = entry
            try:
                state, instruction, event = record_tap(state, timestamp)
            except TapInPhase as exc:
                return _json_error(409, "TapInPhase", str(exc))
            except OutOfOrderTimestamp as exc:
                return _json_error(422, "OutOfOrderTimestamp", str(exc))
            store.append_event(sid, event)
            events.append(event)
            entry[0] = state

            if state.phase is Phase.FEEDBACK:
                # Last move done: score what the cameras saw and issue
                # the feedback in the same breath, one ms after the tap.
                frames = fill_missing_frames(store.load_frames(sid), state.total_moves)
                perceived = count_perceived_errors(
                    frames, expected_multisets(events), error_mode
                )
                state, instruction, fb_event = finalize_session(state, perceived)
                store.append_event(sid, fb_event)
                events.append(fb_event)
                entry[0] = state
                try:
                    report = build_report(
                        (state.config, events), frames, actual_errors=0, mode=error_mode
                    )
                    store.save_report(sid, report_json(report))
                except DomainError as exc:
                    # Perceived errors outside the accuracy domain (for
                    # instance more false positives than moves). The
                    # session still finishes; the report records why it
                    # cannot be scored.
                    store.save_report(
                        sid,
                        json.dumps(
                            {"error": "DomainError", "detail": str(exc)},
                            separators=(",", ":"),
                        ),
                    )
            return {"instruction": instruction.to_dict()}

    @app.post("/sessions/{sid}/frames")
    async def ingest_frame(sid: str, request: Request):
        data = await request.body()
        img = _decode_frame(data)
        if img is None:
            return _json_error(415, "UnsupportedImage", "payload is not valid PPM or PNG")
        with session_lock(sid):
            entry = get_session(sid)
            if entry is None:
                return _json_error(404, "UnknownSession", sid)
            state, _ = entry
            if state.total_moves == 0:
                return _json_error(409, "NoCompletedMove", "tap a move before posting its frame")
            move_index = state.total_moves - 1
        detection = analyze_frame(img, pipeline, frame_id=move_index, seed=0)
        with session_lock(sid):
            store.save_frame(sid, move_index, detection)
        if detection["aborted"]:
            return Response(
                content=json.dumps(detection, separators=(",", ":")),
                status_code=422,
                media_type="application/json",
            )
        return detection

    @app.get("/sessions/{sid}/instruction")
    async def instruction(sid: str):
        with session_lock(sid):
            entry = get_session(sid)
            if entry is None:
                return _json_error(404, "UnknownSession", sid)
            state, _ = entry
            return {
                "instruction": current_instruction(state).to_dict(),
                "phase": state.phase.value,
                "handsDone": state.hands_done,
                "cyclesCompleted": state.cycles_completed,
                "totalMoves": state.total_moves,
            }

    @app.get("/sessions/{sid}/report")
    async def report(sid: str, mode: str | None = None, actual: int = 0):
        with session_lock(sid):
            entry = get_session(sid)
            if entry is None:
                return _json_error(404, "UnknownSession", sid)
            state, events = entry
            if state.phase is not Phase.DONE:
                return _json_error(409, "SessionNotDone", state.phase.value)
            if mode is None and actual == 0:
                stored = store.load_report(sid)
                if stored is not None:
                    status = 422 if stored.startswith('{"error"') else 200
                    return Response(content=stored, status_code=status, media_type="application/json")
            try:
                err_mode = ErrorMode(mode) if mode else error_mode
            except ValueError:
                return _json_error(422, "BadMode", f"unknown mode {mode!r}")
            frames = fill_missing_frames(store.load_frames(sid), state.total_moves)
            try:
                rep = build_report((state.config, events), frames, actual, err_mode)
            except DomainError as exc:
                return _json_error(422, "DomainError", str(exc))
            return Response(content=report_json(rep), media_type="application/json")

    return app


def serve(host: str = "127.0.0.1", port: int = 8000, data_dir: str | None = None) -> None:
    import uvicorn

    store = SessionStore(data_dir or os.environ.get("BLOCKVISION_DATA", DEFAULT_DATA_DIR))
    uvicorn.run(create_app(store), host=host, port=port)
