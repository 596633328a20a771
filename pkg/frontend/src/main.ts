// Browser wiring. Everything interesting lives in conductor/prompts/
// overlay; this file only connects them to the page.

import { ServiceClient } from './api.js';
import { Conductor } from './conductor.js';
import { promptFor, renderPrompt } from './prompts.js';
import { detectionNotice, drawDetection } from './overlay.js';

const client = new ServiceClient('');
const conductor = new Conductor(client);

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
}

const promptEl = byId<HTMLDivElement>('prompt');
const bannerEl = byId<HTMLDivElement>('banner');
const statusEl = byId<HTMLDivElement>('status');
const reportEl = byId<HTMLPreElement>('report');
const canvas = byId<HTMLCanvasElement>('overlay');
const frameInput = byId<HTMLInputElement>('frame-input');

function redraw(): void {
  const view = conductor.view;
  if (view.instruction) renderPrompt(promptEl, promptFor(view.instruction));
  bannerEl.textContent = view.banner
    ? `${view.banner.error}: ${view.banner.detail}`
    : '';
  bannerEl.hidden = !view.banner;
  statusEl.textContent = view.sessionId
    ? `session ${view.sessionId} | taps ${view.tapCount}`
    : 'no session';
  reportEl.hidden = !view.report;
  if (view.report) reportEl.textContent = JSON.stringify(view.report, null, 2);
}

byId<HTMLButtonElement>('start').addEventListener('click', async () => {
  await conductor.start({});
  redraw();
});

async function tap(): Promise<void> {
  if (!conductor.view.sessionId) return;
  await conductor.sendTap(Date.now());
  redraw();
}

byId<HTMLButtonElement>('tap').addEventListener('click', tap);
document.addEventListener('keydown', (ev) => {
  if (ev.code === 'Space' && conductor.view.sessionId) {
    ev.preventDefault();
    void tap();
  }
});

// Frame upload: show the raw image, then the detection quads over it.
frameInput.addEventListener('change', async () => {
  const file = frameInput.files?.[0];
  if (!file || !conductor.view.sessionId) return;
  const detection = await conductor.showFrame(file);

  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const bitmap = await createImageBitmap(file).catch(() => null);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (bitmap) {
    canvas.width = bitmap.width;
    canvas.height = bitmap.height;
    ctx.drawImage(bitmap, 0, 0);
  }
  drawDetection(ctx, detection);
  statusEl.textContent = detectionNotice(detection);
  redraw();
});

// Keep the prompt in sync if the session is driven from elsewhere
// (another tab, the CLI) or after a reload with a session id in the URL.
const fromUrl = new URLSearchParams(location.search).get('session');
if (fromUrl) {
  conductor.view.sessionId = fromUrl;
  void conductor.refresh().then(redraw);
}
setInterval(async () => {
  if (conductor.view.sessionId && !conductor.view.report) {
    await conductor.refresh();
    redraw();
  }
}, 2000);
