"""Append-only, file-per-session persistence.

One directory per session under the store root:

    <root>/<sessionId>/header.json     session config
    <root>/<sessionId>/events.jsonl    one ProgressEvent per line
    <root>/<sessionId>/frames/NNN.json detection keyed by move index
    <root>/<sessionId>/report.json     canonical report bytes

Everything is plain JSON on disk so a session survives restarts: state
is reconstructed by replaying events.jsonl through the engine.
"""

from __future__ import annotations

import json
import uuid
from pathlib import Path

from .session import (
    ProgressEvent,
    SessionConfig,
    SessionState,
    create_session,
    event_from_dict,
    replay_log,
)


def fill_missing_frames(frames_by_index: dict[int, dict], moves: int) -> list[dict]:
    """One detection dict per move; moves without a stored frame count
    as empty (no blocks seen, nothing to flag)."""
    out = []
    for i in range(moves):
        out.append(
            frames_by_index.get(
                i, {"frameId": i, "blocks": [], "aborted": False, "abortReason": None}
            )
        )
    return out


class SessionStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def exists(self, session_id: str) -> bool:
        return (self._dir(session_id) / "header.json").is_file()

    def session_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "header.json").is_file()
        )

    def create(self, config: SessionConfig) -> str:
        session_id = uuid.uuid4().hex[:12]
        d = self._dir(session_id)
        d.mkdir(parents=True)
        (d / "header.json").write_text(
            json.dumps(config.to_dict(), separators=(",", ":")) + "\n"
        )
        (d / "events.jsonl").touch()
        return session_id

    def load_config(self, session_id: str) -> SessionConfig:
        header = json.loads((self._dir(session_id) / "header.json").read_text())
        return SessionConfig.from_dict(header)

    def append_event(self, session_id: str, event: ProgressEvent) -> None:
        line = json.dumps(event.to_dict(), separators=(",", ":"))
        with open(self._dir(session_id) / "events.jsonl", "a") as fh:
            fh.write(line + "\n")

    def load_events(self, session_id: str) -> list[ProgressEvent]:
        path = self._dir(session_id) / "events.jsonl"
        events = []
        for line in path.read_text().splitlines():
            if line.strip():
                events.append(event_from_dict(json.loads(line)))
        return events

    def load_state(self, session_id: str) -> tuple[SessionState, list[ProgressEvent]]:
        """Rebuild engine state by replaying the stored log."""
        config = self.load_config(session_id)
        events = self.load_events(session_id)
        if not events:
            return create_session(config), []
        return replay_log(config, events), events

    def save_frame(self, session_id: str, move_index: int, detection: dict) -> None:
        frames = self._dir(session_id) / "frames"
        frames.mkdir(exist_ok=True)
        (frames / f"{move_index:03d}.json").write_text(
            json.dumps(detection, separators=(",", ":")) + "\n"
        )

    def load_frames(self, session_id: str) -> dict[int, dict]:
        frames = self._dir(session_id) / "frames"
        if not frames.is_dir():
            return {}
        out = {}
        for path in sorted(frames.glob("*.json")):
            out[int(path.stem)] = json.loads(path.read_text())
        return out

    def save_report(self, session_id: str, report_bytes: str) -> None:
        (self._dir(session_id) / "report.json").write_text(report_bytes)

    def load_report(self, session_id: str) -> str | None:
        path = self._dir(session_id) / "report.json"
        return path.read_text() if path.is_file() else None
