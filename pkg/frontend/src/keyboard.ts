// Keyboard bindings: arrows steer, space stops, everything else is a no-op.

import type { ActionName } from "./protocol.js";

const BINDINGS: Record<string, ActionName> = {
  ArrowUp: "move_forward",
  ArrowLeft: "turn_left",
  ArrowRight: "turn_right",
  " ": "stop",
};

export function keyToAction(key: string): ActionName | null {
  return BINDINGS[key] ?? null;
}
