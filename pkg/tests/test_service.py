"""HTTP gateway tests.

Everything goes through FastAPI's TestClient against an app bound to a
temp-dir store. The two load-bearing properties are crash recovery
(a fresh app over the same store replays to the same state) and report
fidelity (the HTTP bytes are exactly what the library serializer
produces for the same log and frames).
"""

import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image as PILImage

from blockvision import (
    ErrorMode,
    SessionConfig,
    SessionStore,
    build_report,
    create_app,
    fill_missing_frames,
    random_scene,
    render_scene,
    report_json,
)

START = 1_000
STEP = 250


def make_client(tmp_path, **kwargs):
    store = SessionStore(tmp_path / "data")
    return TestClient(create_app(store=store, **kwargs)), store


def ppm_bytes(img: np.ndarray) -> bytes:
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode() + img.astype(np.uint8).tobytes()


def png_bytes(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(img.astype(np.uint8)).save(buf, format="PNG")
    return buf.getvalue()


def create_session_http(client, config: dict | None = None) -> str:
    resp = client.post("/sessions", content=json.dumps(config or {}))
    assert resp.status_code == 201
    return resp.json()["sessionId"]


def tap(client, sid, t):
    return client.post(f"/sessions/{sid}/tap", content=json.dumps({"timestamp": t}))


def run_to_done(client, sid, start=START, step=STEP):
    """Tap until the feedback instruction comes back; return (final
    payload, number of taps)."""
    t = start
    for n in range(1, 200):
        resp = tap(client, sid, t)
        assert resp.status_code == 200, resp.text
        body = resp.json()
        if body["instruction"]["kind"] == "feedback":
            return body, n
        t += step
    raise AssertionError("session never finished")


@pytest.fixture
def scene_frame():
    """Level-0 render that detects as exactly 2 red, 1 green, 1 blue."""
    return render_scene(random_scene(seed=0, block_counts=(2, 1, 1)))


@pytest.fixture
def dense_frame():
    """Level-0 render with nine blocks, three per color."""
    return render_scene(random_scene(seed=0, block_counts=(3, 3, 3)))


class TestCreateSession:
    def test_default_config(self, tmp_path):
        client, store = make_client(tmp_path)
        resp = client.post("/sessions", content=b"")
        assert resp.status_code == 201
        body = resp.json()
        assert body["instruction"]["kind"] == "awaitReady"
        assert store.exists(body["sessionId"])

    def test_two_sessions_get_distinct_ids(self, tmp_path):
        client, _ = make_client(tmp_path)
        assert create_session_http(client) != create_session_http(client)

    def test_custom_config_is_persisted(self, tmp_path):
        client, store = make_client(tmp_path)
        sid = create_session_http(client, {"cyclesPerHand": 2, "rngSeed": 9})
        config = store.load_config(sid)
        assert config.cycles_per_hand == 2
        assert config.rng_seed == 9

    def test_invalid_config_is_400(self, tmp_path):
        client, store = make_client(tmp_path)
        resp = client.post("/sessions", content=json.dumps({"cyclesPerHand": 0}))
        assert resp.status_code == 400
        assert resp.json()["error"] == "InvalidConfig"
        assert store.session_ids() == []

    def test_non_json_body_is_400(self, tmp_path):
        client, _ = make_client(tmp_path)
        resp = client.post("/sessions", content=b"not json {")
        assert resp.status_code == 400
        assert resp.json()["error"] == "InvalidConfig"


class TestTap:
    def test_ready_tap_yields_move_instruction(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        body = tap(client, sid, START).json()
        assert body["instruction"]["kind"] == "moveBlock"
        assert body["instruction"]["color"] in ("red", "green", "blue")

    def test_unknown_session_is_404(self, tmp_path):
        client, _ = make_client(tmp_path)
        resp = tap(client, "deadbeef", START)
        assert resp.status_code == 404
        assert resp.json()["error"] == "UnknownSession"

    @pytest.mark.parametrize(
        "payload", [b"", b"{}", b'{"timestamp": "soon"}', b'{"time": 5}']
    )
    def test_malformed_body_is_422(self, tmp_path, payload):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        resp = client.post(f"/sessions/{sid}/tap", content=payload)
        assert resp.status_code == 422
        assert resp.json()["error"] == "BadRequest"

    def test_non_increasing_timestamp_is_422(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        assert tap(client, sid, START).status_code == 200
        resp = tap(client, sid, START)
        assert resp.status_code == 422
        assert resp.json()["error"] == "OutOfOrderTimestamp"

    def test_tap_after_done_is_409(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client, {"cyclesPerHand": 1})
        _, taps = run_to_done(client, sid)
        resp = tap(client, sid, START + taps * STEP)
        assert resp.status_code == 409
        assert resp.json()["error"] == "TapInPhase"

    def test_session_survives_tap_errors(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        tap(client, sid, START)
        tap(client, sid, START - 1)  # rejected
        resp = tap(client, sid, START + 1)
        assert resp.status_code == 200


class TestFrames:
    def test_garbage_payload_is_415(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        resp = client.post(f"/sessions/{sid}/frames", content=b"\x00\x01\x02")
        assert resp.status_code == 415
        assert resp.json()["error"] == "UnsupportedImage"

    def test_truncated_ppm_is_415(self, tmp_path, scene_frame):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        data = ppm_bytes(scene_frame)
        resp = client.post(f"/sessions/{sid}/frames", content=data[: len(data) // 2])
        assert resp.status_code == 415

    def test_unknown_session_is_404(self, tmp_path, scene_frame):
        client, _ = make_client(tmp_path)
        resp = client.post("/sessions/nope/frames", content=ppm_bytes(scene_frame))
        assert resp.status_code == 404

    def test_frame_before_any_move_is_409(self, tmp_path, scene_frame):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        resp = client.post(f"/sessions/{sid}/frames", content=ppm_bytes(scene_frame))
        assert resp.status_code == 409
        assert resp.json()["error"] == "NoCompletedMove"
        # The ready tap alone does not complete a move either.
        tap(client, sid, START)
        resp = client.post(f"/sessions/{sid}/frames", content=ppm_bytes(scene_frame))
        assert resp.status_code == 409

    def test_clean_render_detects_blocks(self, tmp_path, scene_frame):
        client, store = make_client(tmp_path)
        sid = create_session_http(client)
        tap(client, sid, START)
        tap(client, sid, START + STEP)  # first move done
        resp = client.post(f"/sessions/{sid}/frames", content=ppm_bytes(scene_frame))
        assert resp.status_code == 200
        body = resp.json()
        assert body["aborted"] is False
        assert len(body["blocks"]) == 4
        colors = sorted(b["color"] for b in body["blocks"])
        assert colors == ["blue", "green", "red", "red"]
        # Keyed to the move that was just completed.
        assert set(store.load_frames(sid)) == {0}

    def test_png_payload_accepted(self, tmp_path, scene_frame):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        tap(client, sid, START)
        tap(client, sid, START + STEP)
        resp = client.post(f"/sessions/{sid}/frames", content=png_bytes(scene_frame))
        assert resp.status_code == 200
        assert len(resp.json()["blocks"]) == 4

    def test_undetectable_frame_is_422_with_abort_body(self, tmp_path):
        client, store = make_client(tmp_path)
        sid = create_session_http(client)
        tap(client, sid, START)
        tap(client, sid, START + STEP)
        blank = np.full((400, 400, 3), 255, dtype=np.uint8)
        resp = client.post(f"/sessions/{sid}/frames", content=ppm_bytes(blank))
        assert resp.status_code == 422
        body = resp.json()
        assert body["aborted"] is True
        assert body["blocks"] == []
        assert body["abortReason"]
        # Still recorded, so the report can see the gap.
        assert store.load_frames(sid)[0]["aborted"] is True

    def test_reposting_overwrites_same_move(self, tmp_path, scene_frame):
        client, store = make_client(tmp_path)
        sid = create_session_http(client)
        tap(client, sid, START)
        tap(client, sid, START + STEP)
        blank = np.full((400, 400, 3), 255, dtype=np.uint8)
        client.post(f"/sessions/{sid}/frames", content=ppm_bytes(blank))
        client.post(f"/sessions/{sid}/frames", content=ppm_bytes(scene_frame))
        frames = store.load_frames(sid)
        assert list(frames) == [0]
        assert frames[0]["aborted"] is False


class TestInstructionEndpoint:
    def test_shape(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        body = client.get(f"/sessions/{sid}/instruction").json()
        assert body["instruction"]["kind"] == "awaitReady"
        assert body["phase"] == "awaitReady"
        assert body["handsDone"] == 0
        assert body["cyclesCompleted"] == 0
        assert body["totalMoves"] == 0

    def test_total_moves_advances(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        tap(client, sid, START)
        tap(client, sid, START + STEP)
        body = client.get(f"/sessions/{sid}/instruction").json()
        assert body["totalMoves"] == 1
        assert body["phase"] == "awaitMove"

    def test_unknown_session_is_404(self, tmp_path):
        client, _ = make_client(tmp_path)
        assert client.get("/sessions/nope/instruction").status_code == 404


class TestReport:
    def test_unknown_session_is_404(self, tmp_path):
        client, _ = make_client(tmp_path)
        assert client.get("/sessions/nope/report").status_code == 404

    def test_before_done_is_409(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        resp = client.get(f"/sessions/{sid}/report")
        assert resp.status_code == 409
        assert resp.json()["error"] == "SessionNotDone"

    def test_clean_session_scores_100(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client, {"rngSeed": 4})
        final, _ = run_to_done(client, sid)
        assert final["instruction"]["errorCount"] == 0
        body = client.get(f"/sessions/{sid}/report").json()
        assert body["accuracyPercent"] == 100.0
        assert body["perceivedErrors"] == 0
        assert body["actualErrors"] == 0

    def test_http_bytes_match_library_bytes(self, tmp_path, scene_frame):
        client, store = make_client(tmp_path)
        sid = create_session_http(client, {"rngSeed": 8})
        tap(client, sid, START)
        tap(client, sid, START + STEP)
        client.post(f"/sessions/{sid}/frames", content=ppm_bytes(scene_frame))
        final, _ = run_to_done(client, sid, start=START + 2 * STEP)
        resp = client.get(f"/sessions/{sid}/report")
        assert resp.status_code == 200

        config = store.load_config(sid)
        events = store.load_events(sid)
        moves = client.get(f"/sessions/{sid}/instruction").json()["totalMoves"]
        frames = fill_missing_frames(store.load_frames(sid), moves)
        expected = report_json(
            build_report((config, events), frames, 0, ErrorMode.CUMULATIVE_LEGACY)
        )
        assert resp.content == expected.encode()
        # The feedback spoken at the end is the same perceived count.
        assert final["instruction"]["errorCount"] == resp.json()["perceivedErrors"]
        # One stray frame with four blocks against a one-block
        # expectation: three excess detections.
        assert resp.json()["perceivedErrors"] == 3

    def test_report_returns_persisted_bytes_verbatim(self, tmp_path):
        client, store = make_client(tmp_path)
        sid = create_session_http(client)
        run_to_done(client, sid)
        blob = '{"accuracyPercent":12.34,"note":"planted"}'
        store.save_report(sid, blob)
        resp = client.get(f"/sessions/{sid}/report")
        assert resp.status_code == 200
        assert resp.content == blob.encode()

    def test_mode_query_forces_recompute(self, tmp_path):
        client, store = make_client(tmp_path)
        sid = create_session_http(client)
        run_to_done(client, sid)
        store.save_report(sid, '{"planted":true}')
        resp = client.get(f"/sessions/{sid}/report?mode=uniquePerBlock")
        assert resp.status_code == 200
        assert "planted" not in resp.text
        assert resp.json()["perceivedErrors"] == 0

    def test_actual_query_forces_recompute(self, tmp_path, scene_frame):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        tap(client, sid, START)
        tap(client, sid, START + STEP)
        client.post(f"/sessions/{sid}/frames", content=ppm_bytes(scene_frame))
        run_to_done(client, sid, start=START + 2 * STEP)
        body = client.get(f"/sessions/{sid}/report?actual=2").json()
        assert body["actualErrors"] == 2
        assert body["perceivedErrors"] == 3
        assert body["accuracyPercent"] < 100.0

    def test_actual_above_perceived_is_422(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        run_to_done(client, sid)
        resp = client.get(f"/sessions/{sid}/report?actual=1")
        assert resp.status_code == 422
        assert resp.json()["error"] == "DomainError"

    def test_bad_mode_is_422(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = create_session_http(client)
        run_to_done(client, sid)
        resp = client.get(f"/sessions/{sid}/report?mode=psychic")
        assert resp.status_code == 422
        assert resp.json()["error"] == "BadMode"

    def test_unscorable_session_reports_422(self, tmp_path, dense_frame):
        """A short session flooded with spurious detections leaves the
        accuracy domain; the session still completes but the stored
        report is a DomainError marker."""
        client, _ = make_client(tmp_path)
        sid = create_session_http(client, {"cyclesPerHand": 1})
        tap(client, sid, START)
        tap(client, sid, START + STEP)
        client.post(f"/sessions/{sid}/frames", content=ppm_bytes(dense_frame))
        final, _ = run_to_done(client, sid, start=START + 2 * STEP)
        # Nine blocks seen against one expected: eight perceived errors,
        # more than the handful of moves a one-cycle session makes.
        assert final["instruction"]["errorCount"] == 8
        resp = client.get(f"/sessions/{sid}/report")
        assert resp.status_code == 422
        assert resp.json()["error"] == "DomainError"


class TestCrashRecovery:
    def test_fresh_app_replays_to_same_state(self, tmp_path):
        client, store = make_client(tmp_path)
        sid = create_session_http(client, {"rngSeed": 21})
        for i in range(7):
            assert tap(client, sid, START + i * STEP).status_code == 200
        before = client.get(f"/sessions/{sid}/instruction").json()

        revived = TestClient(create_app(store=SessionStore(store.root)))
        after = revived.get(f"/sessions/{sid}/instruction").json()
        assert after == before

    def test_session_continues_after_restart(self, tmp_path, scene_frame):
        client, store = make_client(tmp_path)
        sid = create_session_http(client, {"rngSeed": 22})
        tap(client, sid, START)
        tap(client, sid, START + STEP)
        client.post(f"/sessions/{sid}/frames", content=ppm_bytes(scene_frame))

        revived = TestClient(create_app(store=SessionStore(store.root)))
        final, _ = run_to_done(revived, sid, start=START + 2 * STEP)
        assert final["instruction"]["kind"] == "feedback"
        resp = revived.get(f"/sessions/{sid}/report")
        assert resp.status_code == 200
        assert resp.json()["perceivedErrors"] == 3

    def test_restart_after_done_serves_stored_report(self, tmp_path):
        client, store = make_client(tmp_path)
        sid = create_session_http(client)
        run_to_done(client, sid)
        first = client.get(f"/sessions/{sid}/report").content

        revived = TestClient(create_app(store=SessionStore(store.root)))
        assert revived.get(f"/sessions/{sid}/report").content == first


class TestScriptedRun:
    def test_full_run_matches_offline_engine(self, tmp_path):
        """Drive the whole protocol over HTTP and replay the same taps
        through the library; instruction streams must agree."""
        from blockvision import create_session, record_tap

        client, _ = make_client(tmp_path)
        config = {"rngSeed": 42}
        sid = create_session_http(client, config)

        state = create_session(SessionConfig(rng_seed=42))
        t = START
        done = False
        for _ in range(200):
            http_body = tap(client, sid, t).json()
            state, instruction, _ = record_tap(state, t)
            if instruction.kind.value == "feedback":
                # The service finalizes in the same breath with the
                # perceived count (zero here: no frames posted).
                assert http_body["instruction"]["kind"] == "feedback"
                assert http_body["instruction"]["errorCount"] == 0
                done = True
                break
            assert http_body["instruction"] == instruction.to_dict()
            t += STEP
        assert done
