"""Training objectives.

All terms operate in raw Lab units on (H, W, *) tensors and reduce to scalar
tensors. The weighted total is

    lambda_edge * edge + lambda_hem * hem + lambda_c * content_combined

where content_combined folds the plain chroma L1 together with the optional
perceptual and temporal terms. Defaults for the three outer weights are
(2, 2, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .colorspace import lab_to_rgb_t
from .priors import SOBEL_X, SOBEL_Y


class LossError(ValueError):
    pass


@dataclass
class LossWeights:
    lambda_edge: float = 2.0
    lambda_hem: float = 2.0
    lambda_c: float = 1.0
    hem_fraction: float = 0.5
    lambda_percep: float = 0.1
    lambda_temporal: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.hem_fraction <= 1.0:
            raise LossError(f"hem_fraction must be in (0, 1], got {self.hem_fraction}")


def _as_tensor(x, dtype=np.float32) -> T.Tensor:
    """Constants follow the dtype of the differentiable side of each term."""
    if isinstance(x, T.Tensor):
        return x
    return T.constant(np.asarray(x, dtype=dtype))


_KX = SOBEL_X.astype(np.float32).reshape(3, 3, 1, 1)
_KY = SOBEL_Y.astype(np.float32).reshape(3, 3, 1, 1)


def sobel_magnitude_t(plane: T.Tensor) -> T.Tensor:
    """Differentiable Sobel gradient magnitude of an (H, W) tensor."""
    if plane.data.ndim != 2:
        raise LossError(f"sobel magnitude needs (H, W), got {plane.data.shape}")
    h, w = plane.data.shape
    img = T.reshape(plane, (h, w, 1))
    kx = T.constant(_KX.astype(plane.data.dtype))
    ky = T.constant(_KY.astype(plane.data.dtype))
    gx = T.conv2d(img, kx, stride=1, pad="same")
    gy = T.conv2d(img, ky, stride=1, pad="same")
    mag = T.tsqrt(T.add(T.square(gx), T.square(gy)))
    return T.reshape(mag, (h, w))


def edge_loss(x_l, z_lab: T.Tensor) -> T.Tensor:
    """RMSE between Sobel maps of the input luminance and the output's L."""
    x_l = _as_tensor(x_l, z_lab.data.dtype)
    if x_l.data.ndim != 2:
        raise LossError(f"edge loss luminance must be (H, W), got {x_l.data.shape}")
    h, w = x_l.data.shape
    if z_lab.data.shape != (h, w, 3):
        raise LossError(f"edge loss output must be (H, W, 3), got {z_lab.data.shape}")
    z_l = T.reshape(T.slice_axis(z_lab, 2, 0, 1), (h, w))
    diff = T.sub(sobel_magnitude_t(x_l), sobel_magnitude_t(z_l))
    return T.tsqrt(T.tmean(T.square(diff)))


def hem_loss(z_ab: T.Tensor, y_ab, fraction: float = 0.5) -> T.Tensor:
    """Mean per-pixel chroma L1 over the hardest `fraction` of pixels.

    The per-pixel residual sums |delta a| + |delta b|; selection is by
    stable descending sort of the forward values, so ties break on pixel
    index and the chosen set never depends on gradient state.
    """
    if not 0.0 < fraction <= 1.0:
        raise LossError(f"fraction must be in (0, 1], got {fraction}")
    y_ab = _as_tensor(y_ab, z_ab.data.dtype)
    if z_ab.data.shape != y_ab.data.shape or z_ab.data.ndim != 3 \
            or z_ab.data.shape[2] != 2:
        raise LossError(f"hem loss needs matching (H, W, 2) maps, got "
                        f"{z_ab.data.shape} and {y_ab.data.shape}")
    residual = T.tsum(T.tabs(T.sub(z_ab, y_ab)), axis=2)   # (H, W)
    h, w = residual.data.shape
    k = math.ceil(fraction * h * w)
    order = np.argsort(-residual.data.reshape(-1), kind="stable")
    mask = np.zeros(h * w, dtype=residual.data.dtype)
    mask[order[:k]] = 1.0
    picked = T.mul(residual, T.constant(mask.reshape(h, w)))
    return T.scalar_mul(T.tsum(picked), 1.0 / k)


def content_loss(z_ab: T.Tensor, y_ab) -> T.Tensor:
    """Plain mean absolute chroma error."""
    y_ab = _as_tensor(y_ab, z_ab.data.dtype)
    if z_ab.data.shape != y_ab.data.shape:
        raise LossError(f"content loss shape mismatch {z_ab.data.shape} "
                        f"vs {y_ab.data.shape}")
    return T.tmean(T.tabs(T.sub(z_ab, y_ab)))


def perceptual_loss(z_lab: T.Tensor, y_lab, extractor) -> T.Tensor:
    """Mean feature-space L1 between the rendered output and ground truth.

    Both Lab images are rendered to sRGB through the differentiable path and
    passed through the same fixed feature extractor (3-channel input);
    levels contribute equally.
    """
    y_lab = _as_tensor(y_lab, z_lab.data.dtype)
    pyr_z = extractor.extract_rgb(lab_to_rgb_t(z_lab))
    pyr_y = extractor.extract_rgb(lab_to_rgb_t(y_lab))
    terms = []
    for lv_z in pyr_z.levels:
        lv_y = pyr_y.level(lv_z.scale_div)
        terms.append(T.tmean(T.tabs(T.sub(lv_z.fmap, lv_y.fmap))))
    total = terms[0]
    for t in terms[1:]:
        total = T.add(total, t)
    return T.scalar_mul(total, 1.0 / len(terms))


def temporal_loss(z_ab: T.Tensor, prev_ab, flow=None) -> T.Tensor:
    """Chroma consistency with the previous frame.

    With a flow field the previous chroma is warped to the current frame and
    compared only where the warp source stays in frame; without flow the
    comparison is direct (identical to a zero flow field).
    """
    prev_ab = _as_tensor(prev_ab, z_ab.data.dtype)
    if z_ab.data.shape != prev_ab.data.shape or z_ab.data.ndim != 3:
        raise LossError(f"temporal loss needs matching (H, W, C) maps, got "
                        f"{z_ab.data.shape} and {prev_ab.data.shape}")
    if flow is None:
        return T.tmean(T.tabs(T.sub(z_ab, prev_ab)))
    h, w, c = z_ab.data.shape
    warped = T.bilinear_warp(prev_ab, flow)
    valid = T.warp_valid_mask(flow, (h, w))
    count = int(valid.sum())
    if count == 0:
        # nothing comparable; contributes nothing rather than failing
        return T.constant(np.zeros((), dtype=z_ab.data.dtype))
    mask = np.repeat(valid.astype(z_ab.data.dtype)[..., None], c, axis=2)
    masked = T.mul(T.tabs(T.sub(z_ab, warped)), T.constant(mask))
    return T.scalar_mul(T.tsum(masked), 1.0 / (count * c))


def total_loss(x_l, z_lab: T.Tensor, y_lab, weights: LossWeights,
               percep_extractor=None, z_prev_ab=None, flow=None):
    """Weighted sum of all active terms.

    Returns (scalar tensor, components dict); the dict holds plain floats of
    every unweighted term plus the combined content term and the total.
    """
    y_lab = _as_tensor(y_lab, z_lab.data.dtype)
    if z_lab.data.shape != y_lab.data.shape:
        raise LossError(f"output/target shape mismatch {z_lab.data.shape} "
                        f"vs {y_lab.data.shape}")
    z_ab = T.slice_axis(z_lab, 2, 1, 3)
    y_ab = T.slice_axis(y_lab, 2, 1, 3)

    e = edge_loss(x_l, z_lab)
    hem = hem_loss(z_ab, y_ab, weights.hem_fraction)
    content = content_loss(z_ab, y_ab)

    combined = content
    percep_val = 0.0
    if percep_extractor is not None:
        percep = perceptual_loss(z_lab, y_lab, percep_extractor)
        combined = T.add(combined, T.scalar_mul(percep, weights.lambda_percep))
        percep_val = percep.item()
    temporal_val = 0.0
    if z_prev_ab is not None:
        temporal = temporal_loss(z_ab, z_prev_ab, flow)
        combined = T.add(combined, T.scalar_mul(temporal, weights.lambda_temporal))
        temporal_val = temporal.item()

    total = T.add(T.add(T.scalar_mul(e, weights.lambda_edge),
                        T.scalar_mul(hem, weights.lambda_hem)),
                  T.scalar_mul(combined, weights.lambda_c))
    components = {
        "edge": e.item(),
        "hem": hem.item(),
        "content": content.item(),
        "perceptual": percep_val,
        "temporal": temporal_val,
        "content_combined": combined.item(),
        "total": total.item(),
    }
    return total, components
