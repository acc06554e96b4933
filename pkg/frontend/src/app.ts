// Bootstrap: wire the WebSocket session to the panel and schematic.

import { OperatorSession } from './connection.js';
import { PanelModel, SchematicModel } from './model.js';
import { PanelView } from './panel.js';
import { SchematicView } from './schematic.js';

const params = new URLSearchParams(location.search);
const url = params.get('ws') ?? 'ws://127.0.0.1:9100';

const panelModel = new PanelModel();
const schematicModel = new SchematicModel();

const session = new OperatorSession(url, {
  onFrame: (frame, wallMs) => {
    if (frame.type === 'manifest') {
      panelModel.loadManifest(frame);
      schematicModel.loadManifest(frame);
      panel.renderButtons();
    } else if (frame.type === 'state') {
      panelModel.applyState(frame, wallMs);
      schematicModel.applyState(frame);
      panel.renderLamps();
      panel.renderEvents(frame.events);
      schematic.draw();
    } else if (frame.type === 'error' && frame.id == null) {
      panel.toast(frame.reason);
    }
  },
  onStatus: (connected, detail) => {
    panelModel.connected = connected;
    panel.setStatus(connected, detail);
    if (!connected) panel.renderLamps(); // lamps grey out as they go stale
  },
});

const panel = new PanelView(document, panelModel, session);
const canvas = document.getElementById('schematic') as HTMLCanvasElement;
const schematic = new SchematicView(canvas, schematicModel);

const overlayToggle = document.getElementById('toggle-overpressure');
overlayToggle?.addEventListener('click', () => {
  schematic.showOverpressure = !schematic.showOverpressure;
  schematic.draw();
});

// stale-lamp sweep while no frames arrive
setInterval(() => {
  if (!panelModel.connected) panel.renderLamps();
}, 500);

session.connect();
