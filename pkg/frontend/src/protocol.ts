// Frame shapes exchanged with the twin's operator WebSocket API.

export interface SignalInfo {
  name: string;
  direction: 'IN' | 'OUT';
  kind: 'sensor' | 'actuator' | 'button';
  group: string;
}

export interface LaneInfo {
  key: string;
  tube: number;
  index: number;
  length: number;
  direction: number;
  fixtures: [string, number][];
}

export interface ManifestFrame {
  type: 'manifest';
  signals: SignalInfo[];
  lanes: LaneInfo[];
  tick_rate: number;
}

export interface VehicleInfo {
  id: number;
  kind: string;
  lane: string;
  s: number;
  speed: number;
  length: number;
}

export interface PlantEvent {
  time: number;
  channel: string;
  kind: string;
}

export interface StateFrame {
  type: 'state';
  sim_time: number;
  signals: Record<string, number>;
  entities: Record<string, Record<string, unknown>>;
  vehicles: VehicleInfo[];
  smoke: Record<string, number>;
  events: PlantEvent[];
}

export interface AckFrame {
  type: 'ack';
  id: number | null;
  applies_at: number;
}

export interface ErrorFrame {
  type: 'error';
  id?: number | null;
  reason: string;
}

export type ServerFrame = ManifestFrame | StateFrame | AckFrame | ErrorFrame;

export type CommandFrame =
  | { type: 'press'; signal: string; id: number }
  | { type: 'toggle'; target: string; id: number }
  | { type: 'command'; line: string; id: number };

export function parseFrame(raw: string): ServerFrame | null {
  try {
    const frame = JSON.parse(raw);
    if (frame && typeof frame.type === 'string') {
      return frame as ServerFrame;
    }
  } catch {
    // malformed frames are logged by the caller; the session continues
  }
  return null;
}
