// Mock server plumbing shared by the conformance tests.

import type { ObservationFrame, ServerFrame } from "../src/protocol.js";
import { SessionClient } from "../src/session.js";

export class MockSocket {
  outbox: string[] = [];

  send(data: string): void {
    this.outbox.push(data);
  }

  sentMessages(): any[] {
    return this.outbox.map((m) => JSON.parse(m));
  }
}

export function observation(step: number, over: Partial<ObservationFrame> = {}): ObservationFrame {
  return {
    type: "observation",
    step,
    gps: [0.25 * step, 0],
    compass: 0,
    goal: [3.5, -1.25],
    d: 4.2 - 0.25 * step,
    collided: false,
    images: {},
    map: {
      walls: [
        [0, 0, 10, 0],
        [10, 0, 10, 10],
        [10, 10, 0, 10],
        [0, 10, 0, 0],
      ],
      start: [2, 5],
      goal: [6, 4],
      agent: [2 + 0.25 * step, 5, 0],
      trajectory: Array.from({ length: step + 1 }, (_, k) => [2 + 0.25 * k, 5] as [number, number]),
      max_steps: 500,
    },
    ...over,
  };
}

export function connectedSession(): { session: SessionClient; socket: MockSocket } {
  const socket = new MockSocket();
  const session = new SessionClient(socket);
  session.onMessage(
    JSON.stringify({
      type: "hello",
      dataset: { split: "train", episodes: 1, scenes: ["s"] },
      actions: ["move_forward", "turn_left", "turn_right", "stop"],
      success_radius: 0.2,
      max_steps: 500,
    } satisfies ServerFrame),
  );
  return { session, socket };
}

export function serve(session: SessionClient, frame: ServerFrame): void {
  session.onMessage(JSON.stringify(frame));
}
