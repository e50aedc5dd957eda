import { describe, expect, it } from "vitest";
import { initPrototypes, sobelEdge, softSegmentation } from "../src/masks";
import { Frame } from "../src/png";

function frameOf(height: number, width: number,
                 fill: (x: number, y: number) => [number, number, number]): Frame {
  const rgb = new Float64Array(3 * height * width);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = fill(x, y);
      const i = y * width + x;
      rgb[3 * i] = r;
      rgb[3 * i + 1] = g;
      rgb[3 * i + 2] = b;
    }
  }
  return { id: "t", height, width, rgb };
}

describe("sobelEdge", () => {
  it("maps a flat frame to exactly zero", () => {
    const frame = frameOf(12, 10, () => [0.4, 0.4, 0.4]);
    const edge = sobelEdge(frame);
    expect(Math.max(...edge)).toBe(0);
  });

  it("peaks at 1 on a frame with structure and stays in [0, 1]", () => {
    const frame = frameOf(16, 16, (x) => (x < 8 ? [0, 0, 0] : [1, 1, 1]));
    const edge = sobelEdge(frame);
    let min = Infinity;
    let max = -Infinity;
    for (const v of edge) {
      min = Math.min(min, v);
      max = Math.max(max, v);
    }
    expect(min).toBeGreaterThanOrEqual(0);
    expect(max).toBe(1);
  });

  it("marks the boundary columns of a step, not the flat interior", () => {
    const frame = frameOf(8, 12, (x) => (x < 6 ? [0.2, 0.2, 0.2] : [0.9, 0.9, 0.9]));
    const edge = sobelEdge(frame);
    const row = 4;
    expect(edge[row * 12 + 5]).toBeGreaterThan(0.9);
    expect(edge[row * 12 + 6]).toBeGreaterThan(0.9);
    expect(edge[row * 12 + 1]).toBe(0);
    expect(edge[row * 12 + 10]).toBe(0);
  });
});

describe("softSegmentation", () => {
  it("gives every pixel a class vector summing to 1 within 1e-4", () => {
    const frame = frameOf(14, 11, (x, y) => [x / 11, y / 14, 0.5]);
    const protos = initPrototypes(19, 0);
    const seg = softSegmentation(frame, protos);
    for (let p = 0; p < 14 * 11; p++) {
      let sum = 0;
      for (let c = 0; c < 19; c++) {
        const v = seg[p * 19 + c];
        expect(v).toBeGreaterThanOrEqual(0);
        sum += v;
      }
      expect(Math.abs(sum - 1)).toBeLessThan(1e-4);
    }
  });

  it("is deterministic for a fixed seed and differs across seeds", () => {
    const frame = frameOf(9, 9, (x, y) => [x / 9, y / 9, (x + y) / 18]);
    const a = softSegmentation(frame, initPrototypes(5, 3));
    const b = softSegmentation(frame, initPrototypes(5, 3));
    const c = softSegmentation(frame, initPrototypes(5, 4));
    expect(Array.from(a)).toEqual(Array.from(b));
    expect(Array.from(a)).not.toEqual(Array.from(c));
  });

  it("separates regions of different colour", () => {
    const frame = frameOf(10, 10, (x) => (x < 5 ? [0.1, 0.1, 0.9] : [0.9, 0.1, 0.1]));
    const protos = initPrototypes(6, 0);
    const seg = softSegmentation(frame, protos);
    const argmax = (p: number) => {
      let bestC = 0;
      for (let c = 1; c < 6; c++) {
        if (seg[p * 6 + c] > seg[p * 6 + bestC]) bestC = c;
      }
      return bestC;
    };
    const left = argmax(5 * 10 + 1);
    const right = argmax(5 * 10 + 8);
    expect(left).not.toBe(right);
  });

  it("rejects a class count below 2", () => {
    expect(() => initPrototypes(1, 0)).toThrow(/at least 2 classes/);
  });
});
