// Client-side state derivation.  The panel and schematic render whatever
// the latest server snapshot says; nothing here extrapolates plant state.

import {
  LaneInfo,
  ManifestFrame,
  PlantEvent,
  SignalInfo,
  StateFrame,
  VehicleInfo,
} from './protocol.js';

export const STALE_AFTER_MS = 1000;

export type LampState = 'on' | 'off' | 'stale';

export interface ButtonGroup {
  group: string;
  signals: SignalInfo[];
}

/**
 * Button board plus signal lamps, generated from the manifest so a
 * controller change re-skins the panel without code edits.
 */
export class PanelModel {
  buttons: ButtonGroup[] = [];
  signals: SignalInfo[] = [];
  signalImage: Record<string, number> = {};
  simTime = 0;
  connected = false;
  lastStateWallMs = -Infinity;
  private inflight = new Set<string>();

  loadManifest(manifest: ManifestFrame): void {
    this.signals = manifest.signals;
    const groups = new Map<string, SignalInfo[]>();
    for (const sig of manifest.signals) {
      if (sig.kind !== 'button') continue;
      const list = groups.get(sig.group) ?? [];
      list.push(sig);
      groups.set(sig.group, list);
    }
    this.buttons = [...groups.entries()]
      .sort(([a], [b]) => a.localeCompare(b))
      .map(([group, signals]) => ({ group, signals }));
  }

  applyState(frame: StateFrame, wallMs: number): void {
    this.signalImage = frame.signals;
    this.simTime = frame.sim_time;
    this.lastStateWallMs = wallMs;
  }

  lamp(signal: string, wallMs: number): LampState {
    if (wallMs - this.lastStateWallMs > STALE_AFTER_MS) return 'stale';
    return this.signalImage[signal] ? 'on' : 'off';
  }

  outputs(): SignalInfo[] {
    return this.signals.filter((s) => s.direction === 'OUT');
  }

  // Press debounce: a button stays disabled from click to ack/error so one
  // click emits exactly one command.
  markPressed(signal: string): boolean {
    if (this.inflight.has(signal)) return false;
    this.inflight.add(signal);
    return true;
  }

  settle(signal: string): void {
    this.inflight.delete(signal);
  }

  isPending(signal: string): boolean {
    return this.inflight.has(signal);
  }
}

export interface BarrierView {
  group: string;
  theta: number;
  warning: boolean;
}

export interface LightView {
  group: string;
  state: string;
}

export interface CellarView {
  group: string;
  h: number;
}

/** Top-down scene model for the canvas schematic. */
export class SchematicModel {
  lanes: LaneInfo[] = [];
  vehicles: VehicleInfo[] = [];
  barriers: BarrierView[] = [];
  lights: LightView[] = [];
  cellars: CellarView[] = [];
  smoke: Record<string, number> = {};
  overpressure = 'off';
  events: PlantEvent[] = [];
  simTime = 0;

  loadManifest(manifest: ManifestFrame): void {
    this.lanes = manifest.lanes;
  }

  applyState(frame: StateFrame): void {
    this.simTime = frame.sim_time;
    this.vehicles = frame.vehicles;
    this.smoke = frame.smoke;
    this.events = frame.events;
    this.barriers = [];
    this.lights = [];
    this.cellars = [];
    for (const [group, view] of Object.entries(frame.entities)) {
      if (typeof view.theta === 'number') {
        this.barriers.push({
          group,
          theta: view.theta,
          warning: Boolean(view.warning),
        });
      } else if (typeof view.state === 'string' && group.includes('TrafficLight')) {
        this.lights.push({ group, state: view.state });
      } else if (typeof view.h === 'number') {
        this.cellars.push({ group, h: view.h });
      } else if (typeof view.state === 'string' && group.includes('Overpressure')) {
        this.overpressure = view.state;
      }
    }
  }

  smokeLevel(tube: number): number {
    const alpha = this.smoke[String(tube)] ?? 0;
    return Math.round(alpha * 8);
  }
}
