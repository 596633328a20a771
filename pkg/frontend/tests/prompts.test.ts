import { describe, expect, it } from 'vitest';

import { promptFor } from '../src/prompts';

describe('promptFor', () => {
  it('renders a color-dominated move prompt', () => {
    const prompt = promptFor({ kind: 'moveBlock', color: 'red', errorCount: null });
    expect(prompt.screen).toBe('move');
    expect(prompt.heading).toBe('Move a red block');
    expect(prompt.swatch).toBeTruthy();
  });

  it('gives each color its own swatch', () => {
    const swatches = (['red', 'green', 'blue'] as const).map(
      (color) => promptFor({ kind: 'moveBlock', color, errorCount: null }).swatch,
    );
    expect(new Set(swatches).size).toBe(3);
  });

  it('renders the feedback count', () => {
    expect(promptFor({ kind: 'feedback', color: null, errorCount: 4 }).heading).toBe('4 errors');
    expect(promptFor({ kind: 'feedback', color: null, errorCount: 1 }).heading).toBe('1 error');
    expect(promptFor({ kind: 'feedback', color: null, errorCount: 0 }).heading).toBe('0 errors');
  });

  it('keeps ready and switch screens distinct and un-tinted', () => {
    const ready = promptFor({ kind: 'awaitReady', color: null, errorCount: null });
    const switchHands = promptFor({ kind: 'switchHands', color: null, errorCount: null });
    expect(ready.screen).toBe('ready');
    expect(switchHands.screen).toBe('switch');
    expect(ready.swatch).toBeNull();
    expect(switchHands.swatch).toBeNull();
  });
});
