// Instruction -> full-screen prompt. The conductor replaces a robot's
// spoken instructions, so each protocol state gets its own screen and
// the move prompt is dominated by the color itself.

import { Instruction } from './api.js';

export interface Prompt {
  screen: 'ready' | 'move' | 'switch' | 'feedback';
  heading: string;
  detail: string;
  swatch: string | null; // CSS color backing the whole prompt, if any
}

const SWATCHES: Record<string, string> = {
  red: '#c62828',
  green: '#2e7d32',
  blue: '#1565c0',
};

export function promptFor(instruction: Instruction): Prompt {
  switch (instruction.kind) {
    case 'awaitReady':
      return {
        screen: 'ready',
        heading: 'Get ready',
        detail: 'Tap when you are ready to start.',
        swatch: null,
      };
    case 'moveBlock': {
      const color = instruction.color ?? 'red';
      return {
        screen: 'move',
        heading: `Move a ${color} block`,
        detail: 'Tap after each block you move.',
        swatch: SWATCHES[color] ?? null,
      };
    }
    case 'switchHands':
      return {
        screen: 'switch',
        heading: 'Switch hands',
        detail: 'Use your other hand. Tap when you are ready to continue.',
        swatch: null,
      };
    case 'feedback': {
      const n = instruction.errorCount ?? 0;
      return {
        screen: 'feedback',
        heading: n === 1 ? '1 error' : `${n} errors`,
        detail: 'Session complete.',
        swatch: null,
      };
    }
  }
}

export function renderPrompt(el: HTMLElement, prompt: Prompt): void {
  el.dataset.screen = prompt.screen;
  el.style.backgroundColor = prompt.swatch ?? '';
  el.innerHTML = '';
  const heading = document.createElement('h1');
  heading.textContent = prompt.heading;
  const detail = document.createElement('p');
  detail.textContent = prompt.detail;
  el.append(heading, detail);
}
