"""Command line entry points.

Everything the HTTP gateway can do is reachable from a terminal too:
one-shot detection, scene rendering, an interactive session conductor,
offline log analysis, and a small detection benchmark.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from .assessment import ErrorMode, build_report, report_json, reports_to_csv
from .blocks import (
    PipelineConfig,
    aborted_detection_dict,
    detect_blocks,
    detection_to_dict,
    draw_blocks_overlay,
)
from .boxfind import detect_target_area, rectify
from .errors import BlockVisionError, DegenerateQuad, IncompletePerimeter, SingularSystem
from .netpbm import load_image, save_image
from .sceneforge import (
    ground_truth,
    inject_fault,
    random_scene,
    render_scene,
    scene_from_dict,
    scene_to_dict,
    score_detections,
)
from .session import (
    Phase,
    SessionConfig,
    create_session,
    current_instruction,
    finalize_session,
    log_to_jsonl,
    parse_log,
    record_tap,
)
from .storage import fill_missing_frames

_MODES = {"cumulative": ErrorMode.CUMULATIVE_LEGACY, "unique": ErrorMode.UNIQUE_PER_BLOCK}


@click.group()
def main():
    """Block detection and task assessment workbench."""


@main.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--overlay", type=click.Path(dir_okay=False), help="write an annotated copy here")
@click.option("--json", "as_json", is_flag=True, help="print the detection record as JSON")
@click.option("--legacy-proceed", is_flag=True, help="run stage 2 on the raw frame if the box is not found")
@click.option("--frame-id", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def detect(image, overlay, as_json, legacy_proceed, frame_id, seed):
    """Detect blocks in a single camera frame."""
    img = load_image(image)
    config = PipelineConfig(legacy_proceed=legacy_proceed)
    try:
        blocks = detect_blocks(img, config, seed=seed)
        payload = detection_to_dict(frame_id, blocks)
    except (IncompletePerimeter, DegenerateQuad, SingularSystem) as exc:
        blocks = []
        payload = aborted_detection_dict(frame_id, str(exc))

    if overlay:
        try:
            box = detect_target_area(img, config.canny, config.hough_box, seed=seed)
            base = rectify(img, box)
        except IncompletePerimeter:
            base = img
        save_image(draw_blocks_overlay(base, blocks), overlay)

    if as_json:
        click.echo(json.dumps(payload, separators=(",", ":")))
    elif payload["aborted"]:
        click.echo(f"aborted: {payload['abortReason']}")
        sys.exit(2)
    else:
        for b in payload["blocks"]:
            cx = sum(x for x, _ in b["corners"]) / 4.0
            cy = sum(y for _, y in b["corners"]) / 4.0
            click.echo(f"{b['color']:6s} side={b['side']:6.2f} at ({cx:6.1f}, {cy:6.1f})")
        click.echo(f"{len(payload['blocks'])} block(s)")


@main.command("render-scene")
@click.argument("spec", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def render_scene_cmd(spec, output):
    """Render a synthetic camera frame from a scene description."""
    scene = scene_from_dict(json.loads(Path(spec).read_text()))
    save_image(render_scene(scene), output)
    click.echo(f"wrote {output}")


@main.command("random-scene")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--counts", default="2,2,1", show_default=True, help="red,green,blue block counts")
@click.option("--perturb", type=int, default=0, show_default=True)
@click.option("--fault", type=click.IntRange(1, 6), default=None, help="inject one failure mode")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="write JSON here instead of stdout")
def random_scene_cmd(seed, counts, perturb, fault, output):
    """Emit a random scene description as JSON."""
    try:
        nums = tuple(int(p) for p in counts.split(","))
        if len(nums) != 3:
            raise ValueError
    except ValueError:
        raise click.BadParameter("--counts wants three integers, e.g. 2,2,1")
    scene = random_scene(seed, block_counts=nums, perturbation=perturb)
    if fault is not None:
        scene = inject_fault(scene, fault)
    text = json.dumps(scene_to_dict(scene), indent=2)
    if output:
        Path(output).write_text(text + "\n")
        click.echo(f"wrote {output}")
    else:
        click.echo(text)


@main.group()
def session():
    """Run the instruction protocol without the HTTP gateway."""


@session.command("run")
@click.option("--interactive", is_flag=True, help="prompt on the terminal, Enter = tap")
@click.option("--cycles", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--interval", type=int, default=1500, show_default=True, help="auto-mode ms between taps")
@click.option("--errors", type=int, default=0, show_default=True, help="auto-mode observed error count")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default="events.jsonl", show_default=True)
def session_run(interactive, cycles, seed, interval, errors, log_path):
    """Conduct one full two-hand session and write its event log."""
    config = SessionConfig(cycles_per_hand=cycles, rng_seed=seed)
    state = create_session(config)
    events = []
    click.echo(f"instruction: {_describe(current_instruction(state))}")

    start = time.monotonic()
    t = 0
    while state.phase not in (Phase.FEEDBACK, Phase.DONE):
        if interactive:
            click.prompt("", default="", show_default=False, prompt_suffix="[Enter = tap]")
            t = int((time.monotonic() - start) * 1000) or t + 1
        else:
            t += interval
        state, instruction, event = record_tap(state, t)
        events.append(event)
        if event.warning:
            click.echo(f"warning: {event.warning}")
        click.echo(f"instruction: {_describe(instruction)}")

    if interactive:
        errors = click.prompt("observed error count", type=int, default=0)
    state, _, event = finalize_session(state, errors)
    events.append(event)
    Path(log_path).write_text(log_to_jsonl(config, events))
    click.echo(f"session done, {state.total_moves} moves, log in {log_path}")


def _describe(instruction) -> str:
    d = instruction.to_dict()
    if d["kind"] == "moveBlock":
        return f"move a {d['color']} block"
    if d["kind"] == "switchHands":
        return "switch hands, then tap to continue"
    if d["kind"] == "feedback":
        return "hand 2 done, report the error count"
    return "tap when ready"


@main.command()
@click.argument("events", type=click.Path(exists=True, dir_okay=False))
@click.option("--frames", "frames_dir", type=click.Path(exists=True, file_okay=False), help="directory of NNN.json detection records")
@click.option("--mode", type=click.Choice(sorted(_MODES)), default="cumulative", show_default=True)
@click.option("--actual", type=int, default=0, show_default=True, help="known actual error count")
@click.option("--csv", "as_csv", is_flag=True, help="print a one-row CSV instead of JSON")
def analyze(events, frames_dir, mode, actual, as_csv):
    """Re-score a recorded session from its event log."""
    config, event_list = parse_log(Path(events).read_text())
    moves = sum(1 for e in event_list if e.kind.value == "moveTap")
    by_index = {}
    if frames_dir:
        for path in Path(frames_dir).glob("*.json"):
            by_index[int(path.stem)] = json.loads(path.read_text())
    frames = fill_missing_frames(by_index, moves)
    report = build_report((config, event_list), frames, actual_errors=actual, mode=_MODES[mode])
    if as_csv:
        click.echo(reports_to_csv([(Path(events).stem, report)]), nl=False)
    else:
        click.echo(report_json(report))


@main.command()
@click.option("--scenes", type=int, default=20, show_default=True)
@click.option("--perturb", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="machine-readable summary")
def bench(scenes, perturb, seed, as_json):
    """Detection quality and speed over random synthetic scenes."""
    config = PipelineConfig()
    totals = {"tp": 0, "fp": 0, "fn": 0, "color_ok": 0}
    elapsed = 0.0
    for i in range(scenes):
        scene = random_scene(seed + i, perturbation=perturb)
        frame = render_scene(scene)
        t0 = time.perf_counter()
        try:
            blocks = detect_blocks(frame, config, seed=seed + i)
        except BlockVisionError:
            blocks = []
        elapsed += time.perf_counter() - t0
        score = score_detections(ground_truth(scene), blocks)
        for k in totals:
            totals[k] += score[k]

    tp, fp, fn = totals["tp"], totals["fp"], totals["fn"]
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    color_acc = totals["color_ok"] / tp if tp else 1.0
    summary = {
        "scenes": scenes,
        "perturb": perturb,
        "precision": round(precision, 4),
        "recall": round(recall, 4),
        "colorAccuracy": round(color_acc, 4),
        "meanMsPerFrame": round(1000.0 * elapsed / scenes, 1) if scenes else 0.0,
    }
    if as_json:
        click.echo(json.dumps(summary, separators=(",", ":")))
    else:
        click.echo(
            f"{scenes} scenes @ perturb {perturb}: precision {precision:.3f}, "
            f"recall {recall:.3f}, color {color_acc:.3f}, "
            f"{summary['meanMsPerFrame']} ms/frame"
        )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data", type=click.Path(file_okay=False), default=None, help="session storage directory")
def serve(host, port, data):
    """Start the HTTP gateway."""
    from .service import serve as run_server

    run_server(host=host, port=port, data_dir=data)


if __name__ == "__main__":
    main()
