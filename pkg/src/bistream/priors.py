"""Semantic and edge priors consumed by the refinement network.

Both priors are optional per frame. A missing segmentation mask falls back to
a uniform distribution over classes (carrying no information but keeping the
channel layout fixed); a missing edge map falls back to a built-in Sobel
magnitude of the frame's luminance. Imported masks arrive as BTSR sidecars
written by the companion exporter.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .btsr import read_btsr

SOBEL_X = np.array([[-1.0, 0.0, 1.0],
                    [-2.0, 0.0, 2.0],
                    [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T

_SEG_SUM_TOL = 1e-2    # per-pixel class-probability budget slack
_EDGE_RANGE_TOL = 1e-6


class PriorError(ValueError):
    pass


@dataclass
class Priors:
    seg: np.ndarray        # (H, W, c_seg) float32, rows sum to 1
    edge: np.ndarray       # (H, W) float32 in [0, 1]
    seg_source: str        # "imported" or "uniform-fallback"
    edge_source: str       # "imported" or "builtin-sobel"


def _correlate3(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # replicate the border: zero padding would hallucinate edges along the
    # frame boundary of any non-zero flat region
    padded = np.pad(img, 1, mode="edge")
    out = np.zeros_like(img, dtype=np.float64)
    h, w = img.shape
    for u in range(3):
        for v in range(3):
            out += kernel[u, v] * padded[u:u + h, v:v + w]
    return out


def sobel_edge_map(luminance: np.ndarray) -> np.ndarray:
    """Normalised Sobel gradient magnitude; a flat frame maps to zeros."""
    l = np.asarray(luminance, dtype=np.float64)
    if l.ndim != 2:
        raise PriorError(f"edge map needs a (H, W) luminance plane, got {l.shape}")
    gx = _correlate3(l, SOBEL_X)
    gy = _correlate3(l, SOBEL_Y)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak < 1e-8:
        return np.zeros(l.shape, dtype=np.float32)
    return (mag / peak).astype(np.float32)


def seg_sidecar(directory, frame_id: str) -> str:
    return os.path.join(directory, f"{frame_id}_seg.btsr")


def edge_sidecar(directory, frame_id: str) -> str:
    return os.path.join(directory, f"{frame_id}_edge.btsr")


def load_masks(luminance: np.ndarray, seg_path=None, edge_path=None,
               c_seg: int = 19) -> Priors:
    """Assemble the prior planes for one frame.

    Paths that are None (or point at nothing) select the fallback for that
    prior; malformed files are an error, not a fallback.
    """
    l = np.asarray(luminance)
    if l.ndim != 2:
        raise PriorError(f"luminance plane must be (H, W), got {l.shape}")
    hw = l.shape

    if seg_path is not None and os.path.exists(seg_path):
        seg = read_btsr(seg_path).astype(np.float32)
        if seg.ndim != 3 or seg.shape != (*hw, c_seg):
            raise PriorError(f"{seg_path}: segmentation shape {seg.shape}, "
                             f"expected {(*hw, c_seg)}")
        sums = seg.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > _SEG_SUM_TOL):
            worst = float(np.abs(sums - 1.0).max())
            raise PriorError(f"{seg_path}: class probabilities sum to 1 +/- "
                             f"{_SEG_SUM_TOL}, worst deviation {worst:g}")
        if np.any(seg < 0):
            raise PriorError(f"{seg_path}: negative class probability")
        seg = seg / sums[..., None]
        seg_source = "imported"
    else:
        seg = np.full((*hw, c_seg), 1.0 / c_seg, dtype=np.float32)
        seg_source = "uniform-fallback"

    if edge_path is not None and os.path.exists(edge_path):
        edge = read_btsr(edge_path).astype(np.float32)
        if edge.shape != hw:
            raise PriorError(f"{edge_path}: edge map shape {edge.shape}, expected {hw}")
        if edge.min() < -_EDGE_RANGE_TOL or edge.max() > 1.0 + _EDGE_RANGE_TOL:
            raise PriorError(f"{edge_path}: edge values outside [0, 1] "
                             f"(min {edge.min():g}, max {edge.max():g})")
        edge = np.clip(edge, 0.0, 1.0)
        edge_source = "imported"
    else:
        edge = sobel_edge_map(l)
        edge_source = "builtin-sobel"

    return Priors(seg=seg, edge=edge, seg_source=seg_source, edge_source=edge_source)
