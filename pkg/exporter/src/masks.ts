/**
 * Stand-in prior models.
 *
 * Edge: Sobel gradient magnitude of the luma plane, normalised so the
 * strongest edge is 1; a flat frame maps to all zeros. The border is
 * replicated, not zero-padded, so a non-zero flat frame has no phantom
 * edge ring.
 *
 * Segmentation: soft assignment of each pixel to seeded class prototypes
 * in (r, g, b, x, y) space. A softmax over negative squared distances
 * makes every pixel's class vector sum to 1 up to f32 rounding, well
 * inside the 1e-4 contract the pipeline checks on import.
 */

import { mulberry32 } from "./rng.js";
import { Frame, luminance } from "./png.js";

export function sobelEdge(frame: Frame): Float32Array {
  const { height: h, width: w } = frame;
  const luma = luminance(frame);
  const mag = new Float64Array(h * w);
  let peak = 0;
  for (let y = 0; y < h; y++) {
    // clamp = replicate the border row/column
    const y0 = Math.max(0, y - 1) * w;
    const y1 = y * w;
    const y2 = Math.min(h - 1, y + 1) * w;
    for (let x = 0; x < w; x++) {
      const x0 = Math.max(0, x - 1);
      const x2 = Math.min(w - 1, x + 1);
      // each gradient is a difference of two identically-shaped sums, so a
      // locally flat window cancels to exactly zero
      const gx =
        luma[y0 + x2] + 2 * luma[y1 + x2] + luma[y2 + x2] -
        (luma[y0 + x0] + 2 * luma[y1 + x0] + luma[y2 + x0]);
      const gy =
        luma[y2 + x0] + 2 * luma[y2 + x] + luma[y2 + x2] -
        (luma[y0 + x0] + 2 * luma[y0 + x] + luma[y0 + x2]);
      const m = Math.hypot(gx, gy);
      mag[y * w + x] = m;
      if (m > peak) peak = m;
    }
  }
  const out = new Float32Array(h * w);
  if (peak < 1e-8) return out;
  for (let i = 0; i < h * w; i++) {
    out[i] = Math.fround(mag[i] / peak);
  }
  return out;
}

const SEG_TAU = 0.08; // softness of the class assignment

export function initPrototypes(classes: number, seed: number): Float64Array {
  if (!Number.isInteger(classes) || classes < 2) {
    throw new Error(`segmentation needs at least 2 classes, got ${classes}`);
  }
  const rng = mulberry32(seed);
  const protos = new Float64Array(classes * 5);
  for (let i = 0; i < protos.length; i++) protos[i] = rng();
  return protos;
}

/** (H, W, classes) channel-last soft segmentation, each pixel summing to 1. */
export function softSegmentation(
  frame: Frame,
  protos: Float64Array
): Float32Array {
  const { height: h, width: w } = frame;
  const classes = protos.length / 5;
  const out = new Float32Array(h * w * classes);
  const logits = new Float64Array(classes);
  for (let y = 0; y < h; y++) {
    const fy = h > 1 ? y / (h - 1) : 0;
    for (let x = 0; x < w; x++) {
      const fx = w > 1 ? x / (w - 1) : 0;
      const p = y * w + x;
      const r = frame.rgb[3 * p];
      const g = frame.rgb[3 * p + 1];
      const b = frame.rgb[3 * p + 2];
      let best = -Infinity;
      for (let c = 0; c < classes; c++) {
        const dr = r - protos[5 * c];
        const dg = g - protos[5 * c + 1];
        const db = b - protos[5 * c + 2];
        const dx = fx - protos[5 * c + 3];
        const dy = fy - protos[5 * c + 4];
        const d2 = dr * dr + dg * dg + db * db + dx * dx + dy * dy;
        logits[c] = -d2 / SEG_TAU;
        if (logits[c] > best) best = logits[c];
      }
      let sum = 0;
      for (let c = 0; c < classes; c++) {
        logits[c] = Math.exp(logits[c] - best);
        sum += logits[c];
      }
      for (let c = 0; c < classes; c++) {
        out[p * classes + c] = Math.fround(logits[c] / sum);
      }
    }
  }
  return out;
}
