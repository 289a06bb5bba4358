import { describe, expect, it } from "vitest";

import { BAND_HIGH, BAND_LOW, classify, gaugeView } from "../src/gauge.js";

describe("safe-band gauge", () => {
  it("marks the band interior", () => {
    expect(classify(3.5)).toBe("in_band");
    expect(classify(BAND_LOW)).toBe("in_band");
    expect(classify(BAND_HIGH)).toBe("in_band");
  });

  it("rest mark near the unloaded voltage", () => {
    expect(classify(4.5)).toBe("rest");
  });

  it("below-band warning styling", () => {
    expect(classify(2.8)).toBe("below_band");
  });

  it("above-band (too weak) zone", () => {
    expect(classify(4.2)).toBe("above_band");
  });

  it("needle tracks voltage monotonically and stays in [0, 1]", () => {
    let prev = -1;
    for (let v = 2.0; v <= 4.6; v += 0.1) {
      const view = gaugeView(v);
      expect(view.needle).toBeGreaterThanOrEqual(0);
      expect(view.needle).toBeLessThanOrEqual(1);
      expect(view.needle).toBeGreaterThanOrEqual(prev);
      prev = view.needle;
    }
  });

  it("band geometry matches the thresholds", () => {
    const view = gaugeView(3.5);
    expect(view.needle).toBeGreaterThan(view.bandStart);
    expect(view.needle).toBeLessThan(view.bandEnd);
    const edge = gaugeView(BAND_LOW);
    expect(edge.needle).toBeCloseTo(edge.bandStart, 12);
  });
});
