// HUD extraction: the displayed values ARE the frame values. No client-side
// physics, no recomputation; formatting happens only at the DOM boundary.

import type { DoneFrame, ObservationFrame } from "./protocol.js";

export interface HudFields {
  step: number;
  gps: [number, number];
  compass: number;
  goal: [number, number];
  d: number;
  collided: boolean;
}

export function hudFields(frame: ObservationFrame): HudFields {
  return {
    step: frame.step,
    gps: frame.gps,
    compass: frame.compass,
    goal: frame.goal,
    d: frame.d,
    collided: frame.collided,
  };
}

export interface OutcomeFields {
  success: boolean;
  spl: number;
  steps: number;
  collisions: number;
}

export function outcomeFields(frame: DoneFrame): OutcomeFields {
  return {
    success: frame.success,
    spl: frame.spl,
    steps: frame.steps,
    collisions: frame.collisions,
  };
}
