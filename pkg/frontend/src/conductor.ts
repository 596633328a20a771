// Session view state. Deliberately no protocol logic here: the view is
// whatever the service last said, so a page refresh plus one GET puts
// the user back on exactly the same screen.

import {
  ApiError,
  DetectionFrame,
  Instruction,
  Report,
  ServiceClient,
  SessionConfig,
} from './api.js';

export interface Banner {
  status: number;
  error: string;
  detail: string;
}

export interface UiSessionView {
  sessionId: string | null;
  instruction: Instruction | null;
  tapCount: number;
  phase: string | null;
  handsDone: number;
  cyclesCompleted: number;
  totalMoves: number;
  detection: DetectionFrame | null;
  report: Report | null;
  banner: Banner | null;
}

function emptyView(): UiSessionView {
  return {
    sessionId: null,
    instruction: null,
    tapCount: 0,
    phase: null,
    handsDone: 0,
    cyclesCompleted: 0,
    totalMoves: 0,
    detection: null,
    report: null,
    banner: null,
  };
}

export class Conductor {
  view: UiSessionView = emptyView();

  constructor(private readonly client: ServiceClient) {}

  async start(config: SessionConfig = {}): Promise<UiSessionView> {
    const created = await this.client.createSession(config);
    this.view = emptyView();
    this.view.sessionId = created.sessionId;
    this.view.instruction = created.instruction;
    return this.view;
  }

  // Rejected taps (wrong phase, out-of-order clock) surface as a
  // banner and leave the rest of the view untouched.
  async sendTap(timestamp = Date.now()): Promise<UiSessionView> {
    if (!this.view.sessionId) throw new Error('no active session');
    try {
      const instruction = await this.client.tap(this.view.sessionId, timestamp);
      this.view.instruction = instruction;
      this.view.tapCount++;
      this.view.banner = null;
      if (instruction.kind === 'feedback') {
        this.view.report = await this.client.report(this.view.sessionId);
      }
    } catch (err) {
      if (err instanceof ApiError && (err.status === 409 || err.status === 422)) {
        this.view.banner = { status: err.status, error: err.error, detail: err.detail };
      } else {
        throw err;
      }
    }
    return this.view;
  }

  async showFrame(data: ArrayBuffer | Uint8Array | Blob): Promise<DetectionFrame> {
    if (!this.view.sessionId) throw new Error('no active session');
    const detection = await this.client.uploadFrame(this.view.sessionId, data);
    this.view.detection = detection;
    return detection;
  }

  // Re-derive the view from the service (e.g. after a page reload).
  async refresh(): Promise<UiSessionView> {
    if (!this.view.sessionId) throw new Error('no active session');
    const status = await this.client.instruction(this.view.sessionId);
    this.view.instruction = status.instruction;
    this.view.phase = status.phase;
    this.view.handsDone = status.handsDone;
    this.view.cyclesCompleted = status.cyclesCompleted;
    this.view.totalMoves = status.totalMoves;
    return this.view;
  }
}
