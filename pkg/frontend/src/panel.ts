// DOM operator panel: generated button board, lamp grid and the scenario
// console.  All mutation flows through OperatorSession commands.

import { OperatorSession } from './connection.js';
import { PanelModel } from './model.js';

export class PanelView {
  private buttonBoard: HTMLElement;
  private lampBoard: HTMLElement;
  private banner: HTMLElement;
  private ticker: HTMLElement;
  private lampFilter = '';

  constructor(
    private root: Document,
    private model: PanelModel,
    private session: OperatorSession,
    private now: () => number = () => Date.now(),
  ) {
    this.buttonBoard = root.getElementById('buttons')!;
    this.lampBoard = root.getElementById('lamps')!;
    this.banner = root.getElementById('banner')!;
    this.ticker = root.getElementById('ticker')!;
    this.bindScenarioControls();
  }

  setStatus(connected: boolean, detail: string): void {
    this.banner.textContent = connected ? `live (${detail})` : `offline: ${detail}`;
    this.banner.className = connected ? 'banner ok' : 'banner bad';
  }

  renderButtons(): void {
    this.buttonBoard.textContent = '';
    for (const group of this.model.buttons) {
      const box = this.root.createElement('fieldset');
      const legend = this.root.createElement('legend');
      legend.textContent = group.group;
      box.appendChild(legend);
      for (const sig of group.signals) {
        const button = this.root.createElement('button');
        button.textContent = shortLabel(sig.name);
        button.dataset.signal = sig.name;
        button.addEventListener('click', () => this.press(sig.name, button));
        box.appendChild(button);
      }
      this.buttonBoard.appendChild(box);
    }
  }

  private press(signal: string, button: HTMLButtonElement): void {
    // one click, one command: the button is disabled until the ack lands
    if (!this.model.markPressed(signal)) return;
    button.disabled = true;
    this.session.send({ type: 'press', signal }, (ok, detail) => {
      this.model.settle(signal);
      button.disabled = false;
      if (!ok) this.toast(`press rejected: ${detail}`);
    });
  }

  renderLamps(): void {
    const wall = this.now();
    this.lampBoard.textContent = '';
    for (const sig of this.model.outputs()) {
      if (this.lampFilter && !sig.name.includes(this.lampFilter)) continue;
      const lamp = this.root.createElement('span');
      lamp.className = `lamp ${this.model.lamp(sig.name, wall)}`;
      lamp.title = sig.name;
      lamp.textContent = shortLabel(sig.name);
      lamp.dataset.signal = sig.name;
      this.lampBoard.appendChild(lamp);
    }
    const clock = this.root.getElementById('simtime');
    if (clock) clock.textContent = this.model.simTime.toFixed(2);
  }

  renderEvents(events: { time: number; channel: string; kind: string }[]): void {
    this.ticker.textContent = events
      .slice(-6)
      .map((e) => `${e.time.toFixed(2)} ${e.channel}: ${e.kind}`)
      .join('\n');
  }

  toast(text: string): void {
    const note = this.root.getElementById('toast');
    if (note) note.textContent = text;
  }

  private command(line: string): void {
    this.session.send({ type: 'command', line }, (ok, detail) => {
      if (!ok) this.toast(`rejected: ${detail}`);
    });
  }

  private bindScenarioControls(): void {
    const on = (id: string, fn: (el: HTMLInputElement) => void) => {
      const el = this.root.getElementById(id) as HTMLInputElement | null;
      if (!el) return;
      const handler = () => fn(el);
      el.addEventListener(el.tagName === 'INPUT' ? 'change' : 'click', handler);
    };
    on('traffic-on', () => this.command('traffic on'));
    on('traffic-off', () => this.command('traffic off'));
    on('delete-traffic', () => this.command('delete_traffic'));
    for (const tube of [1, 2]) {
      on(`smoke-${tube}`, (el) => this.command(`set_smoke ${tube} ${el.value}`));
      on(`spawn-high-${tube}`, () => this.command(`spawn high_truck ${tube}`));
      on(`spawn-stationary-${tube}`, () => this.command(`spawn stationary ${tube}`));
      on(`spawn-wrongway-${tube}`, () => this.command(`spawn wrongway ${tube}`));
      on(`spawn-speeding-${tube}`, () => this.command(`spawn speeding ${tube}`));
    }
    on('light-intensity', (el) => this.command(`set_light_intensity ${el.value}`));
    on('fill-clean', (el) => this.command(`fill_cellar clean ${el.value}`));
    on('lamp-filter', (el) => {
      this.lampFilter = el.value;
      this.renderLamps();
    });
  }
}

export function shortLabel(name: string): string {
  const markers = ['_a_', '_s_', '_button_'];
  for (const marker of markers) {
    const at = name.lastIndexOf(marker);
    if (at >= 0) return name.slice(at + 1);
  }
  return name;
}
