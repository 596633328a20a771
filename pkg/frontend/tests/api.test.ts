import { describe, expect, it } from 'vitest';

import { ApiError, DetectionFrame, ServiceClient } from '../src/api';
import { DEFAULT_DETECTION, FakeService } from './fake-service';

function clientOver(fake: FakeService): ServiceClient {
  return new ServiceClient('', fake.asFetch());
}

describe('ServiceClient', () => {
  it('creates a session and returns the opening instruction', async () => {
    const fake = new FakeService();
    const created = await clientOver(fake).createSession({ rngSeed: 5 });
    expect(created.sessionId).toBe(fake.sessionId);
    expect(created.instruction.kind).toBe('awaitReady');
    expect(fake.calls[0]).toMatchObject({
      method: 'POST',
      url: '/sessions',
      body: { rngSeed: 5 },
    });
  });

  it('sends taps as timestamped JSON and unwraps the instruction', async () => {
    const fake = new FakeService();
    const client = clientOver(fake);
    const { sessionId } = await client.createSession();
    const instruction = await client.tap(sessionId, 1000);
    expect(instruction.kind).toBe('moveBlock');
    expect(instruction.color).toMatch(/^(red|green|blue)$/);
    expect(fake.calls[1].body).toEqual({ timestamp: 1000 });
  });

  it('throws ApiError with the service error code on rejection', async () => {
    const fake = new FakeService();
    const client = clientOver(fake);
    const { sessionId } = await client.createSession();
    await client.tap(sessionId, 1000);
    const err = await client.tap(sessionId, 1000).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(422);
    expect(err.error).toBe('OutOfOrderTimestamp');
  });

  it('returns detection JSON from a frame upload', async () => {
    const fake = new FakeService();
    const client = clientOver(fake);
    const { sessionId } = await client.createSession();
    await client.tap(sessionId, 1000); // ready
    await client.tap(sessionId, 1250); // first move
    const detection = await client.uploadFrame(sessionId, new Uint8Array([80, 54]));
    expect(detection.aborted).toBe(false);
    expect(detection.blocks).toHaveLength(5);
    expect(detection.frameId).toBe(0);
  });

  it('returns an aborted detection instead of throwing on 422', async () => {
    const aborted: DetectionFrame = {
      frameId: 0,
      blocks: [],
      aborted: true,
      abortReason: 'found 0 of 4 border lines',
    };
    const fake = new FakeService(2, 3, aborted);
    const client = clientOver(fake);
    const { sessionId } = await client.createSession();
    await client.tap(sessionId, 1000);
    await client.tap(sessionId, 1250);
    const detection = await client.uploadFrame(sessionId, new Uint8Array([0]));
    expect(detection.aborted).toBe(true);
    expect(detection.abortReason).toContain('border');
  });

  it('throws on frame upload before any completed move', async () => {
    const fake = new FakeService();
    const client = clientOver(fake);
    const { sessionId } = await client.createSession();
    const err = await client.uploadFrame(sessionId, new Uint8Array([0])).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
  });

  it('reads the protocol counters from the instruction endpoint', async () => {
    const fake = new FakeService();
    const client = clientOver(fake);
    const { sessionId } = await client.createSession();
    await client.tap(sessionId, 1000);
    await client.tap(sessionId, 1250);
    const status = await client.instruction(sessionId);
    expect(status.totalMoves).toBe(1);
    expect(status.phase).toBe('awaitMove');
  });

  it('passes report query parameters through', async () => {
    const fake = new FakeService();
    const client = clientOver(fake);
    const { sessionId } = await client.createSession();
    await client.report(sessionId, { mode: 'uniquePerBlock', actual: 2 }).catch(() => null);
    const last = fake.calls[fake.calls.length - 1];
    expect(last.url).toBe(`/sessions/${sessionId}/report?mode=uniquePerBlock&actual=2`);
  });

  it('rejects the report before the session is done', async () => {
    const fake = new FakeService();
    const client = clientOver(fake);
    const { sessionId } = await client.createSession();
    const err = await client.report(sessionId).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.error).toBe('SessionNotDone');
  });

  it('exposes the default 5-block fixture for overlay tests', () => {
    expect(DEFAULT_DETECTION.blocks).toHaveLength(5);
  });
});
