// DOM wiring: socket lifecycle, episode picker, sensor panes, top-down map,
// HUD, and keyboard input. All state lives in SessionClient; this file only
// paints it.

import { hudFields, outcomeFields } from "./hud.js";
import { keyToAction } from "./keyboard.js";
import type { ObservationFrame } from "./protocol.js";
import { SessionClient } from "./session.js";
import { drawTopdown } from "./topdown.js";

const $ = (id: string) => document.getElementById(id)!;

function wsUrl(): string {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/ws`;
}

let session: SessionClient | null = null;

function connect(): void {
  const banner = $("status");
  banner.textContent = "connecting...";
  banner.className = "banner";
  const ws = new WebSocket(wsUrl());
  const client = new SessionClient({ send: (d) => ws.send(d) }, render);
  session = client;
  ws.onmessage = (ev: MessageEvent) => client.onMessage(String(ev.data));
  ws.onopen = () => {
    banner.textContent = "connected";
    client.requestEpisodes();
  };
  ws.onclose = () => {
    banner.textContent = "disconnected";
    banner.className = "banner error";
    ($("reconnect") as HTMLButtonElement).hidden = false;
  };
  ws.onerror = () => ws.close();
}

function render(): void {
  if (!session) return;
  const picker = $("episodes") as HTMLSelectElement;
  if (picker.options.length !== session.episodes.length) {
    picker.innerHTML = "";
    for (const e of session.episodes) {
      const opt = document.createElement("option");
      opt.value = e.episode_id;
      opt.textContent = `${e.episode_id}  (${e.scene_id}, ${e.gdsp.toFixed(1)} m, ratio ${e.ratio.toFixed(2)})`;
      picker.appendChild(opt);
    }
  }
  $("mode").textContent = session.status;
  const frame = session.frame;
  if (frame) {
    paintImages(frame);
    paintMap(frame);
    const hud = hudFields(frame);
    $("hud-step").textContent = String(hud.step);
    $("hud-gps").textContent = `${hud.gps[0].toFixed(3)}, ${hud.gps[1].toFixed(3)}`;
    $("hud-compass").textContent = hud.compass.toFixed(3);
    $("hud-goal").textContent = `${hud.goal[0].toFixed(3)}, ${hud.goal[1].toFixed(3)}`;
    $("hud-d").textContent = hud.d.toFixed(3);
    $("hud-collided").textContent = hud.collided ? "yes" : "no";
  }
  const panel = $("outcome");
  if (session.outcome) {
    const o = outcomeFields(session.outcome);
    panel.hidden = false;
    panel.textContent = `${o.success ? "SUCCESS" : "FAILED"} - SPL ${o.spl.toFixed(3)}, ` +
      `${o.steps} steps, ${o.collisions} collisions`;
    panel.className = o.success ? "outcome success" : "outcome failure";
  } else {
    panel.hidden = true;
  }
  if (session.lastError) {
    $("errors").textContent = `${session.lastError.code}: ${session.lastError.message}`;
  }
}

function paintImages(frame: ObservationFrame): void {
  const rgb = $("rgb") as HTMLImageElement;
  if (frame.images.rgb) {
    rgb.src = `data:image/png;base64,${frame.images.rgb}`;
  }
  const sem = $("semantic") as HTMLImageElement;
  if (frame.images.semantic) {
    sem.src = `data:image/png;base64,${frame.images.semantic}`;
  }
  if (frame.images.depth) {
    paintDepth(frame.images.depth);
  }
}

// Depth pane: normalized to its own min/max per frame for visibility (the
// browser flattens the 16-bit PNG to 8 bits on decode; display only).
function paintDepth(b64: string): void {
  const img = new Image();
  img.onload = () => {
    const canvas = $("depth") as HTMLCanvasElement;
    const ctx = canvas.getContext("2d")!;
    canvas.width = img.width;
    canvas.height = img.height;
    ctx.drawImage(img, 0, 0);
    const data = ctx.getImageData(0, 0, canvas.width, canvas.height);
    const px = data.data;
    let lo = 255;
    let hi = 0;
    for (let i = 0; i < px.length; i += 4) {
      lo = Math.min(lo, px[i]);
      hi = Math.max(hi, px[i]);
    }
    const span = Math.max(hi - lo, 1);
    for (let i = 0; i < px.length; i += 4) {
      const v = Math.round(((px[i] - lo) / span) * 255);
      px[i] = px[i + 1] = px[i + 2] = v;
    }
    ctx.putImageData(data, 0, 0);
  };
  img.src = `data:image/png;base64,${b64}`;
}

function paintMap(frame: ObservationFrame): void {
  const canvas = $("map") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  drawTopdown(ctx, frame.map, canvas.width, canvas.height);
}

function start(): void {
  $("reset").addEventListener("click", () => {
    const picker = $("episodes") as HTMLSelectElement;
    if (session && picker.value) {
      session.reset(picker.value);
    }
  });
  $("reconnect").addEventListener("click", () => {
    ($("reconnect") as HTMLButtonElement).hidden = true;
    connect();
  });
  document.addEventListener("keydown", (ev: KeyboardEvent) => {
    const action = keyToAction(ev.key);
    if (action && session) {
      ev.preventDefault();
      session.act(action); // silently dropped unless awaiting input
    }
  });
  connect();
}

start();
