// Detection JSON -> annotated canvas. Quads are drawn in the rectified
// frame's coordinates; pass a scale when the canvas is a different size.

import { DetectionFrame } from './api.js';

const STROKES: Record<string, string> = {
  red: '#ff5252',
  green: '#69f0ae',
  blue: '#448aff',
};

// Returns the number of quads drawn so callers can cross-check against
// the detection record.
export function drawDetection(
  ctx: CanvasRenderingContext2D,
  frame: DetectionFrame,
  scale = 1,
): number {
  let drawn = 0;
  ctx.lineWidth = 2;
  for (const block of frame.blocks) {
    const pts = block.corners;
    if (pts.length < 3) continue;
    ctx.beginPath();
    ctx.moveTo(pts[0][0] * scale, pts[0][1] * scale);
    for (let i = 1; i < pts.length; i++) {
      ctx.lineTo(pts[i][0] * scale, pts[i][1] * scale);
    }
    ctx.closePath();
    ctx.strokeStyle = STROKES[block.color] ?? '#ffffff';
    ctx.stroke();
    drawn++;
  }
  return drawn;
}

// Human-readable status line for a detection record.
export function detectionNotice(frame: DetectionFrame): string {
  if (frame.aborted) {
    return `Target area not found: ${frame.abortReason ?? 'detection aborted'}`;
  }
  if (frame.blocks.length === 0) return 'No blocks detected.';
  const n = frame.blocks.length;
  return n === 1 ? '1 block detected.' : `${n} blocks detected.`;
}
