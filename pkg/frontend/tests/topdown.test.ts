import { describe, expect, it } from "vitest";

import { fitTransform, toCanvas, trajectoryColor } from "../src/topdown.js";

const WALLS = [
  [0, 0, 10, 0],
  [10, 0, 10, 10],
  [10, 10, 0, 10],
  [0, 10, 0, 0],
];

describe("top-down mapping", () => {
  it("is an affine fit of the wall extent into the canvas", () => {
    const t = fitTransform(WALLS, 420, 420, 10);
    const origin = toCanvas([0, 0], t);
    const far = toCanvas([10, 10], t);
    expect(origin[0]).toBeCloseTo(10, 6);
    expect(origin[1]).toBeCloseTo(410, 6); // world y up, canvas y down
    expect(far[0]).toBeCloseTo(410, 6);
    expect(far[1]).toBeCloseTo(10, 6);
    // affine: midpoints map to midpoints
    const mid = toCanvas([5, 5], t);
    expect(mid[0]).toBeCloseTo((origin[0] + far[0]) / 2, 6);
    expect(mid[1]).toBeCloseTo((origin[1] + far[1]) / 2, 6);
  });

  it("preserves aspect ratio on non-square scenes", () => {
    const walls = [[0, 0, 20, 0], [20, 0, 20, 5], [20, 5, 0, 5], [0, 5, 0, 0]];
    const t = fitTransform(walls, 400, 400, 0);
    const a = toCanvas([0, 0], t);
    const b = toCanvas([20, 0], t);
    const c = toCanvas([0, 5], t);
    const dx = Math.hypot(b[0] - a[0], b[1] - a[1]);
    const dy = Math.hypot(c[0] - a[0], c[1] - a[1]);
    expect(dx / dy).toBeCloseTo(4.0, 6);
  });

  it("colors the trajectory blue at step 0 and red at the step budget", () => {
    expect(trajectoryColor(0, 500)).toBe("rgb(0,0,255)");
    expect(trajectoryColor(500, 500)).toBe("rgb(255,0,0)");
    expect(trajectoryColor(250, 500)).toBe("rgb(128,0,128)");
    // clamped outside the budget
    expect(trajectoryColor(600, 500)).toBe("rgb(255,0,0)");
  });
});
