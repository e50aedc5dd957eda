"""
Blending the two reference warps
================================

Every frame gets a forward warp (from the first exemplar) and a backward
warp (from the last). The fusion weights depend only on where the frame
sits between its references.
"""

import numpy as np

from bistream.btfb import fuse, temporal_weights

n = 7
print(f"weights across a {n}-frame clip:")
print(" t   alpha_f  alpha_b")
for t in range(n):
    af, ab = temporal_weights(t, n)
    bar = "#" * int(round(af * 20))
    print(f"{t:2d}   {af:.4f}   {ab:.4f}   {bar}")

# the sum is exactly 1.0 in floating point, not just close
sums = [sum(temporal_weights(t, n)) for t in range(n)]
print("\nall sums exactly 1.0:", all(s == 1.0 for s in sums))

rng = np.random.default_rng(0)
w_f = rng.uniform(-60, 60, size=(4, 4, 2)).astype(np.float32)
w_b = rng.uniform(-60, 60, size=(4, 4, 2)).astype(np.float32)

# endpoints hand back the inputs bitwise
print("t=0 returns w_f bitwise:", np.array_equal(fuse(w_f, w_b, 0, n), w_f))
print("t=n-1 returns w_b bitwise:", np.array_equal(fuse(w_f, w_b, n - 1, n), w_b))

# interior frames stay inside the per-pixel segment between the warps
mid = fuse(w_f, w_b, 3, n)
inside = (mid >= np.minimum(w_f, w_b)).all() and (mid <= np.maximum(w_f, w_b)).all()
print("midpoint stays between the warps:", inside)

# swapping references while mirroring t reproduces the same frame
mirror_ok = all(
    np.array_equal(fuse(w_f, w_b, t, n), fuse(w_b, w_f, n - 1 - t, n))
    for t in range(n))
print("swap/mirror symmetry:", mirror_ok)

# the printed form of the blend swaps the coefficients; it stays available
# behind a flag for anyone comparing against that reading
af, ab = temporal_weights(1, n)
lf, lb = temporal_weights(1, n, equation_literal=True)
print(f"\nprose weights at t=1: ({af:.4f}, {ab:.4f}); literal: ({lf:.4f}, {lb:.4f})")
