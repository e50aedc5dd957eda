"""Bidirectional temporal fusion of the two reference warps.

Each frame t in an N-frame clip blends the forward warp (from the first-frame
reference) and the backward warp (from the last-frame reference) with convex
weights driven by the frame's normalised temporal distance to each reference.
A frame adjacent to the first reference trusts the forward warp more; the
printed form of the blend in the source material swaps the two coefficients,
so that reading stays available behind `equation_literal`.

Exactness contracts, all enforced here rather than assumed:
  - alpha_f + alpha_b == 1.0 in floating point, every t
  - t == 0 returns the forward warp bitwise, t == N-1 the backward warp
  - the blend is clipped into [min(w_f, w_b), max(w_f, w_b)] per pixel, so
    convexity survives rounding
  - swapping the references while mirroring t (t -> N-1-t) reproduces the
    same output bitwise: the weight pair is built from min(t, N-1-t) so the
    mirror image sees the identical two floats, and a*x + b*y commutes
"""

from __future__ import annotations

import numpy as np


class FusionError(ValueError):
    pass


def temporal_weights(t: int, n: int, equation_literal: bool = False) -> tuple[float, float]:
    """(alpha_f, alpha_b) for frame t of n; weights sum to exactly 1.0."""
    if n < 2:
        raise FusionError(f"temporal weights need n >= 2 frames, got {n}")
    if not 0 <= t <= n - 1:
        raise FusionError(f"frame index {t} outside [0, {n - 1}]")
    near = min(t, n - 1 - t)
    small = near / (n - 1)
    big = 1.0 - small
    if t <= n - 1 - t:
        alpha_f, alpha_b = big, small
    else:
        alpha_f, alpha_b = small, big
    if equation_literal:
        alpha_f, alpha_b = alpha_b, alpha_f
    return alpha_f, alpha_b


def fuse(w_f: np.ndarray, w_b: np.ndarray, t: int, n: int,
         equation_literal: bool = False) -> np.ndarray:
    """Convex blend of forward and backward warped colour maps."""
    w_f = np.asarray(w_f)
    w_b = np.asarray(w_b)
    if w_f.shape != w_b.shape:
        raise FusionError(f"warp shape mismatch {w_f.shape} vs {w_b.shape}")
    if w_f.dtype != w_b.dtype:
        raise FusionError(f"warp dtype mismatch {w_f.dtype} vs {w_b.dtype}")
    alpha_f, alpha_b = temporal_weights(t, n, equation_literal)
    if alpha_f == 1.0:
        return w_f.copy()
    if alpha_b == 1.0:
        return w_b.copy()
    blend = alpha_f * w_f + alpha_b * w_b
    # rounding may push the blend a ulp outside the segment; clip restores
    # the convexity contract and keeps w_f == w_b a fixed point
    return np.clip(blend, np.minimum(w_f, w_b), np.maximum(w_f, w_b))
