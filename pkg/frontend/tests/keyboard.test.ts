import { describe, expect, it } from "vitest";

import { keyToAction } from "../src/keyboard.js";
import { connectedSession, observation, serve } from "./mock.js";

describe("keyboard mapping", () => {
  it("maps the four bound keys to the exact protocol actions", () => {
    expect(keyToAction("ArrowUp")).toBe("move_forward");
    expect(keyToAction("ArrowLeft")).toBe("turn_left");
    expect(keyToAction("ArrowRight")).toBe("turn_right");
    expect(keyToAction(" ")).toBe("stop");
  });

  it("ignores everything else", () => {
    for (const key of ["ArrowDown", "w", "a", "Enter", "Escape", "x", "Shift"]) {
      expect(keyToAction(key)).toBeNull();
    }
  });

  it("key presses become protocol act messages verbatim", () => {
    const { session, socket } = connectedSession();
    session.reset("e-1");
    serve(session, observation(0));
    for (const key of ["ArrowUp", "ArrowLeft", "ArrowRight", " "]) {
      const action = keyToAction(key)!;
      expect(session.act(action)).toBe(true);
      serve(session, observation(1));
    }
    const acts = socket.sentMessages().filter((m) => m.type === "act");
    expect(acts.map((m) => m.action)).toEqual([
      "move_forward",
      "turn_left",
      "turn_right",
      "stop",
    ]);
  });
});
