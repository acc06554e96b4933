// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from 'vitest';

import { OperatorSession, SocketLike } from '../src/connection.js';
import { PanelModel } from '../src/model.js';
import { PanelView, shortLabel } from '../src/panel.js';
import { ManifestFrame } from '../src/protocol.js';

const manifest: ManifestFrame = {
  type: 'manifest',
  tick_rate: 50,
  lanes: [],
  signals: [
    { name: 'ivar_M_M_HW_Operator_button_close_tube_1', direction: 'IN', kind: 'button', group: 'Operator' },
    { name: 'dvar_M_M_HW_TrafficTube_1_TrafficLight_1_a_red', direction: 'OUT', kind: 'actuator', group: 'TrafficTube_1/TrafficLight_1' },
  ],
};

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  send(data: string): void { this.sent.push(data); }
  close(): void {}
}

function makeDom(): void {
  document.body.innerHTML = `
    <div id="banner"></div><div id="toast"></div><span id="simtime"></span>
    <div id="buttons"></div><div id="lamps"></div><div id="ticker"></div>`;
}

describe('PanelView', () => {
  let socket: FakeSocket;
  let model: PanelModel;
  let view: PanelView;

  beforeEach(() => {
    makeDom();
    socket = new FakeSocket();
    model = new PanelModel();
    const session = new OperatorSession(
      'ws://test',
      { onFrame: () => {}, onStatus: () => {} },
      () => socket,
    );
    session.connect();
    socket.onopen?.();
    view = new PanelView(document, model, session, () => 1000);
    model.loadManifest(manifest);
    view.renderButtons();
  });

  it('populates the button board from manifest groups', () => {
    const legends = [...document.querySelectorAll('legend')].map((l) => l.textContent);
    expect(legends).toEqual(['Operator']);
    const button = document.querySelector('#buttons button') as HTMLButtonElement;
    expect(button.textContent).toBe('button_close_tube_1');
  });

  it('one click emits exactly one command and disables until ack', () => {
    const button = document.querySelector('#buttons button') as HTMLButtonElement;
    button.click();
    button.click();
    button.click();
    const presses = socket.sent.map((s) => JSON.parse(s)).filter((f) => f.type === 'press');
    expect(presses).toHaveLength(1);
    expect(button.disabled).toBe(true);
    socket.onmessage?.({
      data: JSON.stringify({ type: 'ack', id: presses[0].id, applies_at: 0.1 }),
    });
    expect(button.disabled).toBe(false);
    button.click();
    expect(socket.sent.filter((s) => s.includes('"press"'))).toHaveLength(2);
  });

  it('renders lamps with tri-state classes', () => {
    model.applyState({
      type: 'state', sim_time: 1.5,
      signals: { dvar_M_M_HW_TrafficTube_1_TrafficLight_1_a_red: 1 },
      entities: {}, vehicles: [], smoke: {}, events: [],
    }, 900);
    view.renderLamps();
    const lamp = document.querySelector('.lamp') as HTMLElement;
    expect(lamp.className).toBe('lamp on');
    expect(document.getElementById('simtime')!.textContent).toBe('1.50');
  });

  it('stale lamps grey out when frames stop', () => {
    model.applyState({
      type: 'state', sim_time: 1.5, signals: {}, entities: [], vehicles: [],
      smoke: {}, events: [],
    } as never, -5000);
    view.renderLamps();
    const lamp = document.querySelector('.lamp') as HTMLElement;
    expect(lamp.className).toBe('lamp stale');
  });
});

describe('shortLabel', () => {
  it('trims the entity path prefix', () => {
    expect(shortLabel('dvar_M_M_HW_TrafficTube_1_BoomBarrier_1_a_open')).toBe('a_open');
    expect(shortLabel('ivar_M_M_HW_Operator_button_open_tube_2')).toBe('button_open_tube_2');
    expect(shortLabel('odd_name')).toBe('odd_name');
  });
});
