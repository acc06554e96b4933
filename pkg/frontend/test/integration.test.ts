// End-to-end against the real twin: spawns the Python server with the
// demo supervisor and drives it over the WebSocket API exactly like the
// browser panel does.
import { ChildProcess, spawn } from 'node:child_process';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import WebSocket from 'ws';

import { OperatorSession } from '../src/connection.js';
import { PanelModel, SchematicModel } from '../src/model.js';
import { ServerFrame, StateFrame } from '../src/protocol.js';

let server: ChildProcess;
let url = '';

function wsFactory(target: string) {
  return new WebSocket(target) as never;
}

interface Client {
  session: OperatorSession;
  panel: PanelModel;
  schematic: SchematicModel;
  frames: { frame: ServerFrame; wallMs: number }[];
  lampSeen: Map<string, number>; // signal -> wall ms the lamp first read on
}

function makeClient(): Promise<Client> {
  const panel = new PanelModel();
  const schematic = new SchematicModel();
  const frames: Client['frames'] = [];
  const lampSeen = new Map<string, number>();
  const watched = [
    'dvar_M_M_HW_TrafficTube_1_TrafficLight_1_a_red',
    'ivar_M_M_HW_TrafficTube_1_SmokeDetector_1_s_level4',
  ];
  return new Promise((resolve, reject) => {
    const session = new OperatorSession(
      url,
      {
        onFrame: (frame, wallMs) => {
          frames.push({ frame, wallMs });
          if (frame.type === 'manifest') {
            panel.loadManifest(frame);
            schematic.loadManifest(frame);
            resolve({ session, panel, schematic, frames, lampSeen });
          } else if (frame.type === 'state') {
            panel.applyState(frame, wallMs);
            schematic.applyState(frame);
            // "rendering": the lamp state is read right after the frame
            for (const name of watched) {
              if (!lampSeen.has(name) && panel.lamp(name, Date.now()) === 'on') {
                lampSeen.set(name, Date.now());
              }
            }
          }
        },
        onStatus: (ok, detail) => {
          if (!ok && frames.length === 0) reject(new Error(detail));
        },
      },
      wsFactory,
    );
    session.connect();
    setTimeout(() => reject(new Error('no manifest within 10 s')), 10_000);
  });
}

function waitFor<T>(probe: () => T | undefined, timeoutMs = 15_000): Promise<T> {
  const started = Date.now();
  return new Promise((resolve, reject) => {
    const poll = setInterval(() => {
      const value = probe();
      if (value !== undefined) {
        clearInterval(poll);
        resolve(value);
      } else if (Date.now() - started > timeoutMs) {
        clearInterval(poll);
        reject(new Error('condition not met in time'));
      }
    }, 20);
  });
}

beforeAll(async () => {
  server = spawn(
    'python3',
    [
      '-m', 'tunneltwin.cli', 'run',
      '--world', 'builtin:tunnel.world.json',
      '--spec', 'builtin:demo_supervisor.gts',
      '--duration', '240',
      '--realtime',
      '--ws-port', '0',
    ],
    { cwd: '..', stdio: ['ignore', 'pipe', 'pipe'] },
  );
  url = await new Promise<string>((resolve, reject) => {
    let buffer = '';
    server.stdout!.on('data', (chunk) => {
      buffer += String(chunk);
      const match = buffer.match(/operator API on (ws:\/\/[\d.]+:\d+)/);
      if (match) resolve(match[1]);
    });
    server.on('exit', (code) => reject(new Error(`server exited ${code}`)));
    setTimeout(() => reject(new Error('no server banner')), 15_000);
  });
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe('operator panel against the live twin', () => {
  it('connect populates the panel from manifest groups', async () => {
    const client = await makeClient();
    expect(client.panel.buttons.map((g) => g.group)).toEqual(['Operator']);
    const names = client.panel.buttons[0].signals.map((s) => s.name);
    expect(names).toContain('ivar_M_M_HW_Operator_button_close_tube_1');
    await waitFor(() => (client.panel.simTime > 0 ? true : undefined));
    client.session.close();
  }, 30_000);

  it('press lights the a_red lamp within 200 ms of the server flip', async () => {
    const client = await makeClient();
    await waitFor(() => (client.panel.simTime > 0 ? true : undefined));
    let ackAt = 0;
    const lamp = 'dvar_M_M_HW_TrafficTube_1_TrafficLight_1_a_red';
    client.session.send(
      { type: 'press', signal: 'button_close_tube_1' },
      (ok) => { expect(ok).toBe(true); ackAt = Date.now(); },
    );
    const seenAt = await waitFor(() => client.lampSeen.get(lamp));
    // the flip frame and the rendered lamp must coincide: find the wall
    // time of the first state frame carrying the flip
    const flipFrame = client.frames.find(
      ({ frame }) => frame.type === 'state'
        && (frame as StateFrame).signals[lamp] === 1,
    )!;
    expect(seenAt - flipFrame.wallMs).toBeLessThanOrEqual(200);
    expect(ackAt).toBeGreaterThan(0);
    client.session.close();
  }, 30_000);

  it('smoke command drives detector lamp and schematic shading', async () => {
    const client = await makeClient();
    await waitFor(() => (client.panel.simTime > 0 ? true : undefined));
    client.session.send({ type: 'command', line: 'set_smoke 1 4' });
    await waitFor(() =>
      client.panel.signalImage['ivar_M_M_HW_TrafficTube_1_SmokeDetector_1_s_level4'] === 1
        ? true : undefined);
    expect(client.schematic.smokeLevel(1)).toBe(4);
    expect(client.schematic.smokeLevel(2)).toBe(0);
    client.session.close();
  }, 30_000);

  it('a mid-scenario reload re-renders server truth', async () => {
    const first = await makeClient();
    await waitFor(() => (first.panel.simTime > 1 ? true : undefined));
    first.session.send({ type: 'command', line: 'set_smoke 2 6' });
    await waitFor(() => (first.schematic.smokeLevel(2) === 6 ? true : undefined));

    // "reload": a brand new client must see the same plant truth
    const second = await makeClient();
    await waitFor(() => (second.panel.simTime > 0 ? true : undefined));
    expect(second.panel.simTime).toBeGreaterThan(1);
    expect(second.schematic.smokeLevel(2)).toBe(6);
    const lamp = 'ivar_M_M_HW_TrafficTube_2_SmokeDetector_1_s_level6';
    expect(second.panel.signalImage[lamp]).toBe(1);
    first.session.close();
    second.session.close();
  }, 30_000);
});
