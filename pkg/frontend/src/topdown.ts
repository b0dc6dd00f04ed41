// Top-down map rendering: walls as lines, blue start dot, red goal dot, the
// trajectory polyline colored blue -> red as the step count approaches the
// budget, and an arrow at the agent pose. World -> canvas is one affine fit.

import type { MapPayload } from "./protocol.js";

export interface MapTransform {
  scale: number;
  ox: number;
  oy: number;
  height: number;
}

export function fitTransform(
  walls: number[][],
  width: number,
  height: number,
  margin = 12,
): MapTransform {
  let xMin = Infinity;
  let yMin = Infinity;
  let xMax = -Infinity;
  let yMax = -Infinity;
  for (const [ax, ay, bx, by] of walls) {
    xMin = Math.min(xMin, ax, bx);
    xMax = Math.max(xMax, ax, bx);
    yMin = Math.min(yMin, ay, by);
    yMax = Math.max(yMax, ay, by);
  }
  if (!isFinite(xMin)) {
    return { scale: 1, ox: 0, oy: 0, height };
  }
  const spanX = Math.max(xMax - xMin, 1e-6);
  const spanY = Math.max(yMax - yMin, 1e-6);
  const scale = Math.min(
    (width - 2 * margin) / spanX,
    (height - 2 * margin) / spanY,
  );
  return {
    scale,
    ox: margin - xMin * scale,
    oy: margin - yMin * scale,
    height,
  };
}

/** World point to canvas pixels; canvas y grows downward, world y northward. */
export function toCanvas(
  p: [number, number],
  t: MapTransform,
): [number, number] {
  return [p[0] * t.scale + t.ox, t.height - (p[1] * t.scale + t.oy)];
}

/** Trajectory color: fully blue at step 0, fully red at the step budget. */
export function trajectoryColor(step: number, maxSteps: number): string {
  const f = Math.max(0, Math.min(1, maxSteps > 0 ? step / maxSteps : 0));
  const r = Math.round(255 * f);
  const b = Math.round(255 * (1 - f));
  return `rgb(${r},0,${b})`;
}

export function drawTopdown(
  ctx: CanvasRenderingContext2D,
  map: MapPayload,
  width: number,
  height: number,
): void {
  const t = fitTransform(map.walls, width, height);
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#14161a";
  ctx.fillRect(0, 0, width, height);
  ctx.strokeStyle = "#c8ccd4";
  ctx.lineWidth = 1.5;
  for (const [ax, ay, bx, by] of map.walls) {
    const a = toCanvas([ax, ay], t);
    const b = toCanvas([bx, by], t);
    ctx.beginPath();
    ctx.moveTo(a[0], a[1]);
    ctx.lineTo(b[0], b[1]);
    ctx.stroke();
  }
  ctx.lineWidth = 2;
  const traj = map.trajectory;
  for (let k = 1; k < traj.length; k++) {
    const a = toCanvas(traj[k - 1], t);
    const b = toCanvas(traj[k], t);
    ctx.strokeStyle = trajectoryColor(k, map.max_steps);
    ctx.beginPath();
    ctx.moveTo(a[0], a[1]);
    ctx.lineTo(b[0], b[1]);
    ctx.stroke();
  }
  dot(ctx, toCanvas(map.start, t), "#3b6df2"); // start: blue
  dot(ctx, toCanvas(map.goal, t), "#e54a3f"); // goal: red
  arrow(ctx, map.agent, t);
}

function dot(
  ctx: CanvasRenderingContext2D,
  p: [number, number],
  color: string,
): void {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(p[0], p[1], 5, 0, 2 * Math.PI);
  ctx.fill();
}

function arrow(
  ctx: CanvasRenderingContext2D,
  agent: [number, number, number],
  t: MapTransform,
): void {
  const [x, y, heading] = agent;
  const tip: [number, number] = [
    x + 0.35 * Math.cos(heading),
    y + 0.35 * Math.sin(heading),
  ];
  const left: [number, number] = [
    x + 0.18 * Math.cos(heading + 2.5),
    y + 0.18 * Math.sin(heading + 2.5),
  ];
  const right: [number, number] = [
    x + 0.18 * Math.cos(heading - 2.5),
    y + 0.18 * Math.sin(heading - 2.5),
  ];
  const a = toCanvas(tip, t);
  const b = toCanvas(left, t);
  const c = toCanvas(right, t);
  ctx.fillStyle = "#6ee7a0";
  ctx.beginPath();
  ctx.moveTo(a[0], a[1]);
  ctx.lineTo(b[0], b[1]);
  ctx.lineTo(c[0], c[1]);
  ctx.closePath();
  ctx.fill();
}
