/**
 * Stand-in feature model: a seeded, untrained conv pyramid over the RGB
 * frame. Three 3x3 stride-2 conv+relu stages; the second stage's output is
 * the 1/4-scale map, the third's the 1/8-scale map. Each stage's extent is
 * ceil(previous / 2), so the exported maps land exactly on the
 * ceil(H / scale) x ceil(W / scale) grid the pipeline validates against.
 *
 * Weights are He-scaled draws from a seeded PRNG; no transcendentals touch
 * the stream, so the same seed reproduces the same bytes on every run.
 */

import { mulberry32, nearGaussian, Rng } from "./rng.js";
import { Frame } from "./png.js";

export const STAGE_CHANNELS = [8, 16, 24];
const KERNEL = 3;

export interface FeatureMap {
  height: number;
  width: number;
  channels: number;
  /** channel-last row-major, length = height * width * channels */
  data: Float32Array;
}

interface Stage {
  cin: number;
  cout: number;
  /** (KERNEL, KERNEL, cin, cout) row-major */
  w: Float32Array;
}

export function initStages(seed: number): Stage[] {
  const rng: Rng = mulberry32(seed);
  const stages: Stage[] = [];
  let cin = 3;
  for (const cout of STAGE_CHANNELS) {
    const fan = KERNEL * KERNEL * cin;
    const scale = Math.sqrt(6 / fan); // variance 2 / fan after the 1/3 of the draw
    const w = new Float32Array(KERNEL * KERNEL * cin * cout);
    for (let i = 0; i < w.length; i++) {
      w[i] = Math.fround(nearGaussian(rng) * scale);
    }
    stages.push({ cin, cout, w });
    cin = cout;
  }
  return stages;
}

function convDown(
  input: Float32Array,
  h: number,
  w: number,
  stage: Stage
): FeatureMap {
  const oh = Math.ceil(h / 2);
  const ow = Math.ceil(w / 2);
  const { cin, cout } = stage;
  const out = new Float32Array(oh * ow * cout);
  for (let oy = 0; oy < oh; oy++) {
    for (let ox = 0; ox < ow; ox++) {
      const cy = 2 * oy;
      const cx = 2 * ox;
      for (let c = 0; c < cout; c++) {
        let acc = 0;
        for (let u = 0; u < KERNEL; u++) {
          const iy = cy + u - 1;
          if (iy < 0 || iy >= h) continue;
          for (let v = 0; v < KERNEL; v++) {
            const ix = cx + v - 1;
            if (ix < 0 || ix >= w) continue;
            const inBase = (iy * w + ix) * cin;
            const wBase = ((u * KERNEL + v) * cin) * cout + c;
            for (let k = 0; k < cin; k++) {
              acc += input[inBase + k] * stage.w[wBase + k * cout];
            }
          }
        }
        // relu, rounded to f32 on store
        out[(oy * ow + ox) * cout + c] = acc > 0 ? Math.fround(acc) : 0;
      }
    }
  }
  return { height: oh, width: ow, channels: cout, data: out };
}

/** Map of scale divisor (4, 8) to feature map. */
export function extractFeatures(
  frame: Frame,
  stages: Stage[]
): Map<number, FeatureMap> {
  // remap rgb to [-1, 1] f32
  const n = frame.height * frame.width * 3;
  let cur: Float32Array = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    cur[i] = Math.fround(2 * frame.rgb[i] - 1);
  }
  let h = frame.height;
  let w = frame.width;
  const levels = new Map<number, FeatureMap>();
  let div = 1;
  for (const stage of stages) {
    const fm = convDown(cur, h, w, stage);
    cur = fm.data;
    h = fm.height;
    w = fm.width;
    div *= 2;
    if (div === 4 || div === 8) {
      levels.set(div, fm);
    }
  }
  return levels;
}
