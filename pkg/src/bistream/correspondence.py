"""Dense semantic correspondence between a frame and a reference exemplar.

Feature maps are flattened to pixel rows, channel-mean-centred per frame,
L2-normalised, and compared with a scaled dot product; a row softmax turns
each frame pixel's similarities into a distribution over reference pixels.
Colour transfer is then a matrix-vector product per chroma channel, so every
warped value lives in the convex hull of the reference values.

Everything here is plain numpy with no gradient tracking: matching is a
fixed assignment step, not a trained one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T

_NORM_EPS = 1e-8


class CorrespondenceError(ValueError):
    pass


@dataclass
class CorrespondenceMatrix:
    """Row-stochastic attention from frame pixels to reference pixels."""
    weights: np.ndarray        # (h*w of frame, h*w of reference), float32
    src_hw: tuple[int, int]
    ref_hw: tuple[int, int]
    temperature: float


def _as_feature_array(fmap) -> np.ndarray:
    if isinstance(fmap, T.Tensor):
        fmap = fmap.data
    fmap = np.asarray(fmap)
    if fmap.ndim != 3:
        raise CorrespondenceError(f"feature map must be (h, w, C), got {fmap.shape}")
    return fmap.astype(np.float32, copy=False)


def _centre_and_normalise(flat: np.ndarray) -> np.ndarray:
    centred = flat - flat.mean(axis=0, keepdims=True)
    norms = np.sqrt((centred * centred).sum(axis=1, keepdims=True))
    return centred / np.maximum(norms, _NORM_EPS)


def build_correspondence(frame_fmap, ref_fmap, temperature: float = 0.01,
                         tile_rows: int = 1024) -> CorrespondenceMatrix:
    """Cosine-similarity attention with softmax temperature.

    Rows are processed in tiles of `tile_rows` to bound the score buffer;
    each row's result is independent of the tiling.
    """
    if temperature <= 0:
        raise CorrespondenceError(f"temperature must be positive, got {temperature}")
    if tile_rows < 1:
        raise CorrespondenceError(f"tile_rows must be >= 1, got {tile_rows}")
    fx = _as_feature_array(frame_fmap)
    fr = _as_feature_array(ref_fmap)
    if fx.shape[2] != fr.shape[2]:
        raise CorrespondenceError(
            f"channel mismatch: frame features {fx.shape} vs reference {fr.shape}")
    src_hw = fx.shape[:2]
    ref_hw = fr.shape[:2]
    xn = _centre_and_normalise(fx.reshape(-1, fx.shape[2]))
    rn = _centre_and_normalise(fr.reshape(-1, fr.shape[2])).T

    n = xn.shape[0]
    weights = np.empty((n, rn.shape[1]), dtype=np.float32)
    inv_t = np.float32(1.0 / temperature)
    for r0 in range(0, n, tile_rows):
        r1 = min(r0 + tile_rows, n)
        scores = (xn[r0:r1] @ rn) * inv_t
        scores -= scores.max(axis=1, keepdims=True)
        np.exp(scores, out=scores)
        scores /= scores.sum(axis=1, keepdims=True)
        weights[r0:r1] = scores
    return CorrespondenceMatrix(weights=weights, src_hw=src_hw,
                                ref_hw=ref_hw, temperature=float(temperature))


def warp_colors(corr: CorrespondenceMatrix, ref_values: np.ndarray) -> np.ndarray:
    """Pull per-pixel reference values through the attention.

    ref_values: (h_ref, w_ref, C) -> returns (h_src, w_src, C).
    """
    ref_values = np.asarray(ref_values, dtype=np.float32)
    if ref_values.ndim == 2:
        ref_values = ref_values[..., None]
    if ref_values.shape[:2] != corr.ref_hw:
        raise CorrespondenceError(
            f"reference values {ref_values.shape[:2]} do not match the "
            f"matched reference grid {corr.ref_hw}")
    flat = ref_values.reshape(-1, ref_values.shape[2])
    out = corr.weights @ flat
    return out.reshape(*corr.src_hw, ref_values.shape[2])


def upsample_warp(warped: np.ndarray, out_hw) -> np.ndarray:
    """Bilinear lift of a feature-resolution colour map to frame resolution."""
    t = T.bilinear_resample(T.constant(np.asarray(warped, dtype=np.float32)), out_hw)
    return t.data
