// Typed client for the blockvision HTTP gateway. This is the only place
// the frontend talks to the service; everything else works on the
// response types below.

export type BlockColor = 'red' | 'green' | 'blue';

export type InstructionKind = 'awaitReady' | 'moveBlock' | 'switchHands' | 'feedback';

export interface Instruction {
  kind: InstructionKind;
  color: BlockColor | null;
  errorCount: number | null;
}

export interface DetectedBlock {
  corners: [number, number][];
  color: BlockColor;
  side: number;
}

export interface DetectionFrame {
  frameId: number;
  blocks: DetectedBlock[];
  aborted: boolean;
  abortReason: string | null;
}

export interface InstructionStatus {
  instruction: Instruction;
  phase: string;
  handsDone: number;
  cyclesCompleted: number;
  totalMoves: number;
}

export interface Report {
  blocksMoved: number;
  actualErrors: number;
  perceivedErrors: number;
  accuracyPercent: number;
  meanColorChangeMs: number | null;
  meanSameColorMs: number | null;
  perMoveDurations: number[];
}

export interface SessionConfig {
  cyclesPerHand?: number;
  blocksPerCycleMin?: number;
  blocksPerCycleMax?: number;
  colors?: BlockColor[];
  rngSeed?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly error: string,
    readonly detail: string,
  ) {
    super(`${error}: ${detail}`);
  }
}

async function errorFrom(resp: { status: number; json(): Promise<any> }): Promise<ApiError> {
  let body: any = {};
  try {
    body = await resp.json();
  } catch {
    // non-JSON error body; keep the status
  }
  return new ApiError(resp.status, body.error ?? 'HttpError', body.detail ?? String(resp.status));
}

export class ServiceClient {
  constructor(
    private readonly base = '',
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    return this.fetchFn(this.base + path, init);
  }

  async createSession(config: SessionConfig = {}): Promise<{ sessionId: string; instruction: Instruction }> {
    const resp = await this.request('/sessions', {
      method: 'POST',
      body: JSON.stringify(config),
    });
    if (resp.status !== 201) throw await errorFrom(resp);
    return resp.json();
  }

  async tap(sessionId: string, timestamp: number): Promise<Instruction> {
    const resp = await this.request(`/sessions/${sessionId}/tap`, {
      method: 'POST',
      body: JSON.stringify({ timestamp }),
    });
    if (!resp.ok) throw await errorFrom(resp);
    const body = await resp.json();
    return body.instruction;
  }

  // A 422 here is not an error to surface: the body is a valid
  // detection record explaining why the frame was unusable.
  async uploadFrame(sessionId: string, data: ArrayBuffer | Uint8Array | Blob): Promise<DetectionFrame> {
    const resp = await this.request(`/sessions/${sessionId}/frames`, {
      method: 'POST',
      body: data as BodyInit,
    });
    if (resp.ok || resp.status === 422) {
      const body = await resp.json();
      if ('aborted' in body) return body as DetectionFrame;
      throw new ApiError(resp.status, body.error ?? 'HttpError', body.detail ?? '');
    }
    throw await errorFrom(resp);
  }

  async instruction(sessionId: string): Promise<InstructionStatus> {
    const resp = await this.request(`/sessions/${sessionId}/instruction`);
    if (!resp.ok) throw await errorFrom(resp);
    return resp.json();
  }

  async report(sessionId: string, opts: { mode?: string; actual?: number } = {}): Promise<Report> {
    const params = new URLSearchParams();
    if (opts.mode) params.set('mode', opts.mode);
    if (opts.actual) params.set('actual', String(opts.actual));
    const query = params.toString();
    const resp = await this.request(`/sessions/${sessionId}/report${query ? '?' + query : ''}`);
    if (!resp.ok) throw await errorFrom(resp);
    return resp.json();
  }
}
