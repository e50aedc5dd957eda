import { describe, expect, it } from "vitest";
import { extractFeatures, initStages, STAGE_CHANNELS } from "../src/features";
import { Frame } from "../src/png";

function syntheticFrame(height: number, width: number, phase = 0): Frame {
  const rgb = new Float64Array(3 * height * width);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = y * width + x;
      rgb[3 * i] = 0.5 + 0.5 * Math.sin(0.3 * x + phase);
      rgb[3 * i + 1] = 0.5 + 0.5 * Math.cos(0.2 * y - phase);
      rgb[3 * i + 2] = (x + y) / (width + height);
    }
  }
  return { id: "synthetic", height, width, rgb };
}

describe("extractFeatures", () => {
  it("produces the ceil-rule extents at both scales", () => {
    const stages = initStages(0);
    for (const [h, w] of [
      [32, 32],
      [31, 29],
      [70, 30],
      [8, 17],
    ]) {
      const levels = extractFeatures(syntheticFrame(h, w), stages);
      const l4 = levels.get(4)!;
      expect([l4.height, l4.width]).toEqual([Math.ceil(h / 4), Math.ceil(w / 4)]);
      expect(l4.channels).toBe(STAGE_CHANNELS[1]);
      const l8 = levels.get(8)!;
      expect([l8.height, l8.width]).toEqual([Math.ceil(h / 8), Math.ceil(w / 8)]);
      expect(l8.channels).toBe(STAGE_CHANNELS[2]);
    }
  });

  it("is non-negative after the relu stages", () => {
    const levels = extractFeatures(syntheticFrame(24, 24), initStages(0));
    for (const fm of levels.values()) {
      let min = Infinity;
      for (const v of fm.data) min = Math.min(min, v);
      expect(min).toBeGreaterThanOrEqual(0);
    }
  });

  it("is bitwise deterministic across independent runs", () => {
    const a = extractFeatures(syntheticFrame(20, 28), initStages(7));
    const b = extractFeatures(syntheticFrame(20, 28), initStages(7));
    for (const div of [4, 8]) {
      expect(Array.from(a.get(div)!.data)).toEqual(
        Array.from(b.get(div)!.data)
      );
    }
  });

  it("depends on the seed", () => {
    const frame = syntheticFrame(16, 16);
    const a = extractFeatures(frame, initStages(0)).get(8)!;
    const b = extractFeatures(frame, initStages(1)).get(8)!;
    let differs = false;
    for (let i = 0; i < a.data.length; i++) {
      if (a.data[i] !== b.data[i]) {
        differs = true;
        break;
      }
    }
    expect(differs).toBe(true);
  });

  it("responds to the image, not just its size", () => {
    const stages = initStages(0);
    const a = extractFeatures(syntheticFrame(16, 16, 0), stages).get(4)!;
    const b = extractFeatures(syntheticFrame(16, 16, 1.5), stages).get(4)!;
    expect(Array.from(a.data)).not.toEqual(Array.from(b.data));
  });
});
