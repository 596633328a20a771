"""The test protocol as a deterministic, seedable state machine.

A session is five cycles per hand, two hands. Each cycle instructs a
random color and a random count of blocks to move; the user signals
each completed move with a tap. All randomness comes from one seeded
SplitMix64 stream carried inside the state, so the instruction sequence
depends only on the seed, never on tap timing.

States are immutable; ``record_tap`` and ``finalize_session`` return
new states plus the emitted instruction and log event. The JSON Lines
log (header record first, one event per line, fixed field order) is the
portable session artifact: replaying it through a fresh engine must
reproduce the final state bit for bit.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from enum import Enum

from .blocks import COLOR_ORDER, BlockColor
from .errors import (
    InvalidConfig,
    MalformedLog,
    NotInFeedbackPhase,
    OutOfOrderTimestamp,
    TapInPhase,
)
from .rng import SplitMix64


class Phase(Enum):
    AWAIT_READY = "awaitReady"
    AWAIT_MOVE = "awaitMove"
    FEEDBACK = "feedback"
    DONE = "done"


class Hand(Enum):
    FIRST = "first"
    SECOND = "second"


class EventKind(Enum):
    READY_TAP = "readyTap"
    MOVE_TAP = "moveTap"
    HAND_SWITCH = "handSwitch"
    FEEDBACK_ISSUED = "feedbackIssued"


class InstructionKind(Enum):
    AWAIT_READY = "awaitReady"
    MOVE_BLOCK = "moveBlock"
    SWITCH_HANDS = "switchHands"
    FEEDBACK = "feedback"


@dataclass(frozen=True)
class Instruction:
    kind: InstructionKind
    color: BlockColor | None = None
    error_count: int | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "color": self.color.value if self.color else None,
            "errorCount": self.error_count,
        }


@dataclass(frozen=True)
class ProgressEvent:
    kind: EventKind
    timestamp: int
    hand: Hand
    cycle_index: int
    move_index: int
    color_instructed: BlockColor | None
    warning: str | None = None
    error_count: int | None = None

    def to_dict(self) -> dict:
        return {
            "record": "event",
            "kind": self.kind.value,
            "timestamp": self.timestamp,
            "hand": self.hand.value,
            "cycleIndex": self.cycle_index,
            "moveIndex": self.move_index,
            "colorInstructed": self.color_instructed.value if self.color_instructed else None,
            "warning": self.warning,
            "errorCount": self.error_count,
        }


@dataclass(frozen=True)
class SessionConfig:
    cycles_per_hand: int = 5
    blocks_per_cycle: tuple[int, int] = (2, 3)
    colors: tuple[BlockColor, ...] = COLOR_ORDER
    rng_seed: int = 0
    block_inventory: tuple[tuple[BlockColor, int], ...] = (
        (BlockColor.RED, 30),
        (BlockColor.GREEN, 30),
        (BlockColor.BLUE, 13),
    )

    def __post_init__(self):
        lo, hi = self.blocks_per_cycle
        if self.cycles_per_hand < 1:
            raise InvalidConfig("cycles_per_hand must be >= 1")
        if lo > hi or lo < 1:
            raise InvalidConfig("blocks_per_cycle range is empty or non-positive")
        if not self.colors:
            raise InvalidConfig("colors must be non-empty")
        if len(set(self.colors)) != len(self.colors):
            raise InvalidConfig("duplicate colors")
        inventory = dict(self.block_inventory)
        for color in self.colors:
            # The full sufficiency bound (cycles x max per hand) is not
            # enforced: the historical inventory of 13 blue blocks can
            # run dry in a worst-case draw, and that surfaces as a
            # depletion warning on the event, not a config error. What
            # must hold is that any single cycle is servable.
            if inventory.get(color, 0) < hi:
                raise InvalidConfig(
                    f"inventory of {color.value} cannot cover one cycle of {hi}"
                )

    def inventory_of(self, color: BlockColor) -> int:
        return dict(self.block_inventory).get(color, 0)

    def to_dict(self) -> dict:
        return {
            "record": "header",
            "cyclesPerHand": self.cycles_per_hand,
            "blocksPerCycleMin": self.blocks_per_cycle[0],
            "blocksPerCycleMax": self.blocks_per_cycle[1],
            "colors": [c.value for c in self.colors],
            "rngSeed": self.rng_seed,
            "blockInventory": {c.value: n for c, n in self.block_inventory},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        try:
            colors = tuple(BlockColor(c) for c in d.get("colors", ["red", "green", "blue"]))
            inventory = d.get("blockInventory")
            if inventory is None:
                inv = SessionConfig.__dataclass_fields__["block_inventory"].default
            else:
                inv = tuple((BlockColor(c), int(n)) for c, n in inventory.items())
            return cls(
                cycles_per_hand=int(d.get("cyclesPerHand", 5)),
                blocks_per_cycle=(
                    int(d.get("blocksPerCycleMin", 2)),
                    int(d.get("blocksPerCycleMax", 3)),
                ),
                colors=colors,
                rng_seed=int(d.get("rngSeed", 0)),
                block_inventory=inv,
            )
        except (ValueError, TypeError) as exc:
            raise InvalidConfig(f"bad session config: {exc}") from exc


@dataclass(frozen=True)
class SessionState:
    config: SessionConfig
    phase: Phase = Phase.AWAIT_READY
    hands_done: int = 0
    cycles_completed: int = 0
    blocks_moved: int = 0
    number_to_move: int = 0
    color_to_move: BlockColor | None = None
    total_moves: int = 0
    number_of_errors: int | None = None
    rng_state: int = 0
    remaining: tuple[tuple[BlockColor, int], ...] = ()
    last_timestamp: int | None = None

    @property
    def hand(self) -> Hand:
        return Hand.FIRST if self.hands_done == 0 else Hand.SECOND


def create_session(config: SessionConfig) -> SessionState:
    return SessionState(
        config=config,
        rng_state=SplitMix64(config.rng_seed).state,
        remaining=config.block_inventory,
    )


def draw_color(colors: tuple[BlockColor, ...], rng: SplitMix64) -> BlockColor:
    return colors[rng.next_below(len(colors))]


def draw_count(lo: int, hi: int, rng: SplitMix64) -> int:
    return rng.next_int(lo, hi)


def _start_cycle(state: SessionState) -> tuple[SessionState, str | None]:
    """Draw the next color and count; returns the depletion warning if any."""
    rng = SplitMix64(0)
    rng.state = state.rng_state
    color = draw_color(state.config.colors, rng)
    count = draw_count(*state.config.blocks_per_cycle, rng)

    remaining = dict(state.remaining)
    have = remaining.get(color, 0)
    warning = None
    if have < count:
        warning = f"inventory depleted: {color.value} has {have} left, {count} instructed"
    remaining[color] = max(0, have - count)

    new = dataclasses.replace(
        state,
        phase=Phase.AWAIT_MOVE,
        color_to_move=color,
        number_to_move=count,
        blocks_moved=0,
        rng_state=rng.state,
        remaining=tuple(remaining.items()),
    )
    return new, warning


def record_tap(state: SessionState, t: int) -> tuple[SessionState, Instruction, ProgressEvent]:
    """Advance the protocol by one head tap at timestamp ``t`` (ms)."""
    if state.phase in (Phase.FEEDBACK, Phase.DONE):
        raise TapInPhase(f"tap not accepted in phase {state.phase.value}")
    if state.last_timestamp is not None and t <= state.last_timestamp:
        raise OutOfOrderTimestamp(
            f"timestamp {t} not after last event at {state.last_timestamp}"
        )

    if state.phase is Phase.AWAIT_READY:
        kind = EventKind.READY_TAP if state.hands_done == 0 else EventKind.HAND_SWITCH
        new, warning = _start_cycle(dataclasses.replace(state, last_timestamp=t))
        event = ProgressEvent(
            kind=kind,
            timestamp=t,
            hand=new.hand,
            cycle_index=0,
            move_index=0,
            color_instructed=new.color_to_move,
            warning=warning,
        )
        return new, Instruction(InstructionKind.MOVE_BLOCK, new.color_to_move), event

    # AWAIT_MOVE: one block has been moved.
    moved = state.blocks_moved + 1
    event = ProgressEvent(
        kind=EventKind.MOVE_TAP,
        timestamp=t,
        hand=state.hand,
        cycle_index=state.cycles_completed,
        move_index=moved - 1,
        color_instructed=state.color_to_move,
    )
    new = dataclasses.replace(
        state, blocks_moved=moved, total_moves=state.total_moves + 1, last_timestamp=t
    )
    if moved < state.number_to_move:
        return new, Instruction(InstructionKind.MOVE_BLOCK, state.color_to_move), event

    cycles = state.cycles_completed + 1
    new = dataclasses.replace(new, cycles_completed=cycles)
    if cycles < state.config.cycles_per_hand:
        new, warning = _start_cycle(new)
        if warning:
            event = dataclasses.replace(event, warning=warning)
        return new, Instruction(InstructionKind.MOVE_BLOCK, new.color_to_move), event

    hands = state.hands_done + 1
    if hands == 1:
        # Other hand next: the box gets repositioned and the blocks
        # return, so the per-hand counters and the inventory reset.
        new = dataclasses.replace(
            new,
            hands_done=1,
            phase=Phase.AWAIT_READY,
            cycles_completed=0,
            blocks_moved=0,
            number_to_move=0,
            color_to_move=None,
            remaining=state.config.block_inventory,
        )
        return new, Instruction(InstructionKind.SWITCH_HANDS), event

    new = dataclasses.replace(new, hands_done=2, phase=Phase.FEEDBACK)
    return new, Instruction(InstructionKind.FEEDBACK, error_count=None), event


def finalize_session(
    state: SessionState, error_count: int, timestamp: int | None = None
) -> tuple[SessionState, Instruction, ProgressEvent]:
    """Issue the final feedback; only legal in the Feedback phase.

    ``timestamp`` defaults to one millisecond after the last tap so a
    log finalized by an automated caller stays deterministic.
    """
    if state.phase is not Phase.FEEDBACK:
        raise NotInFeedbackPhase(f"cannot finalize in phase {state.phase.value}")
    if timestamp is None:
        timestamp = (state.last_timestamp or 0) + 1
    if state.last_timestamp is not None and timestamp <= state.last_timestamp:
        raise OutOfOrderTimestamp(
            f"timestamp {timestamp} not after last event at {state.last_timestamp}"
        )
    new = dataclasses.replace(
        state,
        phase=Phase.DONE,
        number_of_errors=error_count,
        last_timestamp=timestamp,
    )
    event = ProgressEvent(
        kind=EventKind.FEEDBACK_ISSUED,
        timestamp=timestamp,
        hand=Hand.SECOND,
        cycle_index=state.cycles_completed - 1,
        move_index=state.number_to_move - 1,
        color_instructed=None,
        error_count=error_count,
    )
    return new, Instruction(InstructionKind.FEEDBACK, error_count=error_count), event


def current_instruction(state: SessionState) -> Instruction:
    if state.phase is Phase.AWAIT_READY:
        if state.hands_done == 0:
            return Instruction(InstructionKind.AWAIT_READY)
        return Instruction(InstructionKind.SWITCH_HANDS)
    if state.phase is Phase.AWAIT_MOVE:
        return Instruction(InstructionKind.MOVE_BLOCK, state.color_to_move)
    return Instruction(InstructionKind.FEEDBACK, error_count=state.number_of_errors)


def _dumps(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"))


def log_to_jsonl(config: SessionConfig, events: list[ProgressEvent]) -> str:
    lines = [_dumps(config.to_dict())]
    lines.extend(_dumps(e.to_dict()) for e in events)
    return "\n".join(lines) + "\n"


def event_from_dict(d: dict) -> ProgressEvent:
    try:
        return ProgressEvent(
            kind=EventKind(d["kind"]),
            timestamp=int(d["timestamp"]),
            hand=Hand(d["hand"]),
            cycle_index=int(d["cycleIndex"]),
            move_index=int(d["moveIndex"]),
            color_instructed=(
                BlockColor(d["colorInstructed"]) if d.get("colorInstructed") else None
            ),
            warning=d.get("warning"),
            error_count=d.get("errorCount"),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise MalformedLog(f"bad event record: {exc}") from exc


def parse_log(text: str) -> tuple[SessionConfig, list[ProgressEvent]]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise MalformedLog("empty log")
    try:
        records = [json.loads(line) for line in lines]
    except json.JSONDecodeError as exc:
        raise MalformedLog(f"invalid JSON on line {exc.lineno}") from exc
    if records[0].get("record") != "header":
        raise MalformedLog("first line must be the header record")
    config = SessionConfig.from_dict(records[0])
    events = []
    last_t = None
    for rec in records[1:]:
        if rec.get("record") != "event":
            raise MalformedLog(f"unexpected record type {rec.get('record')!r}")
        ev = event_from_dict(rec)
        if last_t is not None and ev.timestamp <= last_t:
            raise MalformedLog(f"timestamps not strictly increasing at {ev.timestamp}")
        last_t = ev.timestamp
        events.append(ev)
    return config, events


def replay_log(config: SessionConfig, events: list[ProgressEvent]) -> SessionState:
    """Drive a fresh engine with the logged taps; the log is the truth.

    Raises MalformedLog when the logged events disagree with what the
    engine emits for the same taps (a tampered or corrupted log).
    """
    state = create_session(config)
    for ev in events:
        if ev.kind is EventKind.FEEDBACK_ISSUED:
            if ev.error_count is None:
                raise MalformedLog("feedback event missing errorCount")
            state, _, replayed = finalize_session(state, ev.error_count, ev.timestamp)
        else:
            try:
                state, _, replayed = record_tap(state, ev.timestamp)
            except (TapInPhase, OutOfOrderTimestamp) as exc:
                raise MalformedLog(f"log does not replay: {exc}") from exc
        if replayed != ev:
            raise MalformedLog(
                f"replay mismatch at t={ev.timestamp}: got {replayed}, log has {ev}"
            )
    return state
