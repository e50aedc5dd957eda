/**
 * Seeded PRNG for the stand-in model weights. mulberry32 over u32 state:
 * the same seed gives the same stream on every platform, which is what
 * makes re-exports byte-identical.
 */

export type Rng = () => number;

export function mulberry32(seed: number): Rng {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Near-Gaussian draw via a sum of four uniforms (mean 0, variance 1/3).
 * Avoids transcendentals on purpose: + and * round identically everywhere.
 */
export function nearGaussian(rng: Rng): number {
  return rng() + rng() + rng() + rng() - 2.0;
}
