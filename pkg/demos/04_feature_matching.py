"""
Matching a frame against a reference
====================================

Colour moves from the exemplar to the frame through a row-stochastic
attention matrix over feature-space similarities. Here the "frames" are two
shifted copies of the same luminance pattern, so matching should find the
shift and carry the colours with it.
"""

import numpy as np

from bistream.correspondence import (build_correspondence, upsample_warp,
                                     warp_colors)
from bistream.features import FeatureExtractor

H = W = 32
yy, xx = np.meshgrid(np.linspace(0, 1, H), np.linspace(0, 1, W), indexing="ij")

# a luminance pattern and the same pattern shifted a quarter period; the
# second term breaks the anti-diagonal symmetry so no two cells look alike
def lum(x, y):
    return 50 + 30 * np.sin(2 * np.pi * (x + y)) \
              + 12 * np.sin(6 * np.pi * x) * np.cos(4 * np.pi * y)

frame_l = lum(xx, yy)
ref_l = lum(xx + 0.25, yy)

extractor = FeatureExtractor(seed=0)
pyr_frame = extractor.extract_luminance(frame_l)
pyr_ref = extractor.extract_luminance(ref_l)

lvl = 8
corr = build_correspondence(pyr_frame.level(lvl).fmap, pyr_ref.level(lvl).fmap,
                            temperature=0.01)
print("attention matrix:", corr.weights.shape)
print("row sums (should all be 1):",
      corr.weights.sum(axis=1).min(), corr.weights.sum(axis=1).max())
print("sharpest row mass:", corr.weights.max())

# paint the reference with a smooth chroma field and pull it across
ref_ab = np.stack([40 * np.sin(2 * np.pi * yy), 40 * np.cos(2 * np.pi * xx)],
                  axis=2).astype(np.float32)
ref_ab_small = ref_ab[::lvl, ::lvl]   # cheap stand-in for a resampled grid
warped_small = warp_colors(corr, ref_ab_small)
print("\nwarped grid:", warped_small.shape)

# convexity: warped values cannot leave the reference's value range
print("reference a-range:", ref_ab_small[..., 0].min(), ref_ab_small[..., 0].max())
print("   warped a-range:", warped_small[..., 0].min(), warped_small[..., 0].max())

full = upsample_warp(warped_small, (H, W))
print("\nlifted to frame resolution:", full.shape)

# matching a map against itself is the identity assignment
self_corr = build_correspondence(pyr_frame.level(lvl).fmap,
                                 pyr_frame.level(lvl).fmap, temperature=1e-4)
diag = np.argmax(self_corr.weights, axis=1) == np.arange(self_corr.weights.shape[0])
print("self-match picks the diagonal:", diag.all())
