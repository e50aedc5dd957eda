"""Semantic feature pyramids for reference matching.

A small stack of 3x3 conv+relu stages produces maps at 1/4 and 1/8 of the
input frame. The built-in weights are seeded orthogonal draws, not trained;
externally computed features can be dropped in from BTSR sidecar files and the
rest of the pipeline treats both sources identically. Spatial extents follow
the ceil rule: a level at scale 1/s over an H x W frame is
ceil(H / s) x ceil(W / s).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .btsr import read_btsr

STAGE_CHANNELS = (16, 32, 64, 64)
STAGE_STRIDES = (1, 2, 2, 2)   # cumulative downscale 1, 2, 4, 8
KERNEL = 3
LEVEL_STAGE = {4: 2, 8: 3}     # scale divisor -> stage index whose output feeds it


class FeatureError(ValueError):
    pass


@dataclass
class FeatureLevel:
    scale_div: int
    fmap: T.Tensor  # (h, w, C)


@dataclass
class FeaturePyramid:
    levels: list[FeatureLevel] = field(default_factory=list)
    source: str = "builtin"   # "builtin" or "imported"

    def level(self, scale_div: int) -> FeatureLevel:
        for lv in self.levels:
            if lv.scale_div == scale_div:
                return lv
        raise FeatureError(f"pyramid has no 1/{scale_div} level "
                           f"(present: {[lv.scale_div for lv in self.levels]})")


def level_shape(frame_hw, scale_div: int) -> tuple[int, int]:
    return (math.ceil(frame_hw[0] / scale_div), math.ceil(frame_hw[1] / scale_div))


def _orthogonal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))   # fix the QR sign ambiguity
    if rows < cols:
        q = q.T
    return q[:rows, :cols]


def init_feature_weights(seed: int, in_channels: int = 1) -> dict[str, T.Tensor]:
    """Seeded orthogonal conv stacks; gain sqrt(2) for the relu stages."""
    rng = np.random.default_rng(seed)
    weights: dict[str, T.Tensor] = {}
    cin = in_channels
    for i, cout in enumerate(STAGE_CHANNELS):
        fan = KERNEL * KERNEL * cin
        w = _orthogonal(rng, fan, cout) * np.sqrt(2.0)
        weights[f"stage{i}.w"] = T.constant(
            w.reshape(KERNEL, KERNEL, cin, cout).astype(np.float32))
        weights[f"stage{i}.b"] = T.constant(np.zeros(cout, dtype=np.float32))
        cin = cout
    return weights


class FeatureExtractor:
    """Deterministic conv pyramid over a normalised input image."""

    def __init__(self, seed: int = 0, in_channels: int = 1):
        self.in_channels = in_channels
        self.weights = init_feature_weights(seed, in_channels)

    def extract(self, x) -> FeaturePyramid:
        """x: normalised (H, W, Cin) tensor or array; values near [-1, 1]."""
        if not isinstance(x, T.Tensor):
            x = T.constant(np.asarray(x, dtype=np.float32))
        if x.data.ndim == 2:
            x = T.reshape(x, (*x.data.shape, 1))
        if x.data.ndim != 3 or x.data.shape[2] != self.in_channels:
            raise FeatureError(f"extract: expected (H, W, {self.in_channels}) input, "
                               f"got {x.data.shape}")
        levels = []
        cur = x
        for i in range(len(STAGE_CHANNELS)):
            w = self.weights[f"stage{i}.w"]
            b = self.weights[f"stage{i}.b"]
            if w.data.dtype != cur.data.dtype:
                # fixed weights follow the input's precision (float64 inputs
                # appear in finite-difference checks)
                w = T.constant(w.data.astype(cur.data.dtype))
                b = T.constant(b.data.astype(cur.data.dtype))
            cur = T.relu(T.conv2d(cur, w, b, stride=STAGE_STRIDES[i], pad="same"))
            for div, stage in LEVEL_STAGE.items():
                if stage == i:
                    levels.append(FeatureLevel(div, cur))
        return FeaturePyramid(levels=levels, source="builtin")

    def extract_luminance(self, l_raw: np.ndarray) -> FeaturePyramid:
        """Raw L* in [0, 100] -> pyramid; applies the L/50 - 1 normalisation."""
        return self.extract(np.asarray(l_raw, dtype=np.float32) / 50.0 - 1.0)

    def extract_rgb(self, rgb: T.Tensor) -> FeaturePyramid:
        """sRGB in [0, 1] (tensor) -> pyramid; remaps to [-1, 1] per channel."""
        shifted = T.scalar_mul(rgb, 2.0) - 1.0
        return self.extract(shifted)


def sidecar_path(directory, frame_id: str, scale_div: int) -> str:
    return os.path.join(directory, f"{frame_id}_L{scale_div}.btsr")


def import_pyramid(directory, frame_id: str, frame_hw,
                   scale_divs=(4, 8)) -> FeaturePyramid:
    """Load `<frame-id>_L<div>.btsr` maps and validate their extents."""
    levels = []
    for div in scale_divs:
        path = sidecar_path(directory, frame_id, div)
        if not os.path.exists(path):
            raise FeatureError(f"missing feature sidecar {path}")
        arr = read_btsr(path)
        want = level_shape(frame_hw, div)
        if arr.ndim != 3 or arr.shape[:2] != want:
            raise FeatureError(
                f"{path}: feature map shape {arr.shape} does not match frame "
                f"{tuple(frame_hw)} at scale 1/{div} (expected {want} x C)")
        levels.append(FeatureLevel(div, T.constant(arr.astype(np.float32))))
    return FeaturePyramid(levels=levels, source="imported")
