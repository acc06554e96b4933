// Canvas schematic: top-down view of both tubes with live vehicles,
// barrier arcs, light colors, smoke shading, cellar bars and the
// overpressure overlay.  Pan with mouse drag, zoom with the wheel.

import { SchematicModel } from './model.js';

const LANE_GAP = 26;
const TUBE_GAP = 70;
const TUNNEL_SPAN: [number, number] = [300, 700];

const LIGHT_COLORS: Record<string, string> = {
  off: '#444',
  green: '#2e9e4f',
  red: '#d03a2f',
  yellowFlashing: '#e0b62c',
};

export class SchematicView {
  private panX = 40;
  private panY = 60;
  private zoom = 0.9;
  showOverpressure = true;

  constructor(
    private canvas: HTMLCanvasElement,
    private model: SchematicModel,
  ) {
    canvas.addEventListener('wheel', (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.1 : 1 / 1.1;
      this.zoom = Math.min(8, Math.max(0.2, this.zoom * factor));
      this.draw();
    });
    let dragging = false;
    let last: [number, number] = [0, 0];
    canvas.addEventListener('mousedown', (ev) => {
      dragging = true;
      last = [ev.clientX, ev.clientY];
    });
    canvas.addEventListener('mousemove', (ev) => {
      if (!dragging) return;
      this.panX += ev.clientX - last[0];
      this.panY += ev.clientY - last[1];
      last = [ev.clientX, ev.clientY];
      this.draw();
    });
    canvas.addEventListener('mouseup', () => (dragging = false));
    canvas.addEventListener('mouseleave', () => (dragging = false));
  }

  private laneY(tube: number, index: number, wrong: boolean): number {
    const base = (tube - 1) * (2 * LANE_GAP + TUBE_GAP);
    if (wrong) return base + LANE_GAP / 2;
    return base + index * LANE_GAP;
  }

  draw(): void {
    const ctx = this.canvas.getContext('2d');
    if (!ctx) return;
    const m = this.model;
    ctx.save();
    ctx.fillStyle = '#14181d';
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.translate(this.panX, this.panY);
    ctx.scale(this.zoom, this.zoom);

    for (const lane of m.lanes) {
      if (lane.direction < 0) continue;
      const y = this.laneY(lane.tube, lane.index, false);
      ctx.fillStyle = '#2b2f36';
      ctx.fillRect(0, y, lane.length, LANE_GAP - 6);
      // covered tunnel section
      ctx.fillStyle = 'rgba(90, 110, 140, 0.25)';
      ctx.fillRect(TUNNEL_SPAN[0], y, TUNNEL_SPAN[1] - TUNNEL_SPAN[0], LANE_GAP - 6);
      // smoke shading scales with the detector alpha
      const alpha = m.smoke[String(lane.tube)] ?? 0;
      if (alpha > 0) {
        ctx.fillStyle = `rgba(200, 200, 200, ${0.5 * alpha})`;
        ctx.fillRect(TUNNEL_SPAN[0], y, TUNNEL_SPAN[1] - TUNNEL_SPAN[0], LANE_GAP - 6);
      }
    }

    for (const light of m.lights) {
      const tube = light.group.includes('TrafficTube_1') ? 1 : 2;
      const index = light.group.endsWith('_1') ? 0 : 1;
      const y = this.laneY(tube, index, false);
      ctx.fillStyle = LIGHT_COLORS[light.state] ?? '#888';
      ctx.beginPath();
      ctx.arc(160 + index * 10, y - 6, 4, 0, 2 * Math.PI);
      ctx.fill();
    }

    for (const barrier of m.barriers) {
      const tube = barrier.group.includes('TrafficTube_1') ? 1
        : barrier.group.includes('TrafficTube_2') ? 2 : 0;
      if (tube === 0) continue; // emergency passages sit off the lanes
      const x = barrier.group.endsWith('_1') ? 120 : 140;
      const y = this.laneY(tube, 0, false) + LANE_GAP - 6;
      const angle = (-barrier.theta * Math.PI) / 180;
      ctx.strokeStyle = barrier.warning ? '#ff5050' : '#e8e8e8';
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(x, y);
      ctx.lineTo(x + 18 * Math.cos(angle), y + 18 * Math.sin(angle));
      ctx.stroke();
    }

    ctx.fillStyle = '#58a6ff';
    for (const vehicle of m.vehicles) {
      const lane = m.lanes.find((l) => l.key === vehicle.lane);
      if (!lane) continue;
      const wrong = lane.direction < 0;
      const y = this.laneY(lane.tube, lane.index, wrong) + 4;
      const s = wrong ? lane.length - vehicle.s : vehicle.s;
      ctx.fillStyle = wrong ? '#ff8844' : vehicle.kind === 'high_truck'
        ? '#ffd23c' : '#58a6ff';
      ctx.fillRect(s - vehicle.length, y, vehicle.length, 8);
    }

    let barY = this.laneY(2, 1, false) + LANE_GAP + 24;
    for (const cellar of m.cellars) {
      ctx.fillStyle = '#233';
      ctx.fillRect(0, barY, 120, 10);
      ctx.fillStyle = '#3fa7d6';
      ctx.fillRect(0, barY, 120 * Math.min(1, cellar.h / 2.0), 10);
      ctx.fillStyle = '#aaa';
      ctx.font = '9px monospace';
      ctx.fillText(`${cellar.group} ${cellar.h.toFixed(2)} m`, 126, barY + 8);
      barY += 16;
    }

    if (this.showOverpressure && m.overpressure !== 'off') {
      const y = this.laneY(1, 1, false) + LANE_GAP;
      ctx.fillStyle = 'rgba(170, 90, 220, 0.35)';
      ctx.fillRect(TUNNEL_SPAN[0], y, TUNNEL_SPAN[1] - TUNNEL_SPAN[0], TUBE_GAP - LANE_GAP);
      ctx.fillStyle = '#c792ea';
      const x = m.overpressure === 'left' ? TUNNEL_SPAN[0] : TUNNEL_SPAN[1];
      ctx.beginPath();
      ctx.arc(x, y + (TUBE_GAP - LANE_GAP) / 2, 6, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.restore();
  }
}
