"""Evaluation metrics: PSNR, SSIM, and colour distribution consistency (CDC).

PSNR and SSIM score single frames against ground truth; CDC scores a clip on
its own by comparing per-channel colour histograms of frames at temporal
strides 1, 2 and 4 with Jensen-Shannon divergence (natural log). Lower CDC
means steadier colours.

Everything runs in float64. Images are channels-last RGB in [0, 1] unless a
function says otherwise.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.signal import convolve2d

from .colorspace import luminance_of

CDC_STRIDES = (1, 2, 4)
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_SIGMA = 1.5
_SSIM_WINDOW = 11


class MetricError(ValueError):
    pass


def _check_pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise MetricError(f"shape mismatch {pred.shape} vs {gt.shape}")
    return pred, gt


def psnr(pred: np.ndarray, gt: np.ndarray, peak: float = 1.0):
    """Peak signal-to-noise ratio in dB; None for identical images."""
    pred, gt = _check_pair(pred, gt)
    mse = float(np.mean((pred - gt) ** 2))
    if mse == 0.0:
        return None
    return 10.0 * np.log10(peak * peak / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(coords ** 2) / (2.0 * sigma ** 2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(x: np.ndarray, y: np.ndarray, data_range: float = 1.0) -> float:
    """Mean structural similarity of two (H, W) planes.

    Gaussian 11x11 window (sigma 1.5), population statistics, evaluated on
    the fully valid interior only. Identical inputs score exactly 1.0.
    """
    x, y = _check_pair(x, y)
    if x.ndim != 2:
        raise MetricError(f"ssim expects single planes, got shape {x.shape}")
    if x.shape[0] < _SSIM_WINDOW or x.shape[1] < _SSIM_WINDOW:
        raise MetricError(f"ssim needs at least {_SSIM_WINDOW}x{_SSIM_WINDOW} "
                          f"images, got {x.shape}")
    win = _gaussian_window(_SSIM_WINDOW, _SSIM_SIGMA)
    mu_x = convolve2d(x, win, mode="valid")
    mu_y = convolve2d(y, win, mode="valid")
    sig_x = convolve2d(x * x, win, mode="valid") - mu_x * mu_x
    sig_y = convolve2d(y * y, win, mode="valid") - mu_y * mu_y
    sig_xy = convolve2d(x * y, win, mode="valid") - mu_x * mu_y
    c1 = (_SSIM_K1 * data_range) ** 2
    c2 = (_SSIM_K2 * data_range) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sig_xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sig_x + sig_y + c2)
    return float(np.mean(num / den))


def _colour_histograms(frame: np.ndarray) -> np.ndarray:
    """(3, 256) per-channel histograms of an RGB frame, each summing to 1."""
    q = np.clip(np.round(frame * 255.0), 0, 255).astype(np.uint8)
    hw = q.shape[0] * q.shape[1]
    return np.stack([np.bincount(q[..., c].ravel(), minlength=256) / hw
                     for c in range(3)])


def _jsd(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence, natural log, 0*log(0) treated as 0."""
    m = 0.5 * (p + q)
    def kl(a):
        nz = a > 0
        return float(np.sum(a[nz] * np.log(a[nz] / m[nz])))
    return 0.5 * kl(p) + 0.5 * kl(q)


def cdc(frames) -> float:
    """Colour distribution consistency of an RGB clip.

    Mean JSD between per-channel histograms of frame pairs (t, t + s),
    averaged over channels and pairs, then averaged across strides 1, 2, 4
    with equal weight. Needs at least 5 frames so every stride has a pair.
    """
    frames = list(frames)
    if len(frames) <= max(CDC_STRIDES):
        raise MetricError(f"cdc needs more than {max(CDC_STRIDES)} frames, "
                          f"got {len(frames)}")
    hists = [_colour_histograms(np.asarray(f, dtype=np.float64)) for f in frames]
    per_stride = []
    for s in CDC_STRIDES:
        vals = []
        for t in range(len(frames) - s):
            chan = [_jsd(hists[t][c], hists[t + s][c]) for c in range(3)]
            vals.append(sum(chan) / 3.0)
        per_stride.append(sum(vals) / len(vals))
    return sum(per_stride) / len(per_stride)


def eval_report(pred_frames, gt_frames, ids=None) -> dict:
    """Per-frame PSNR/SSIM plus clip-level means and CDC.

    PSNR is computed on RGB, SSIM on the L* plane scaled to [0, 1]. Frames
    that match ground truth exactly report "identical" instead of a PSNR
    number; the mean covers the numeric frames (or "identical" if every
    frame matched). CDC is null for clips shorter than 5 frames.
    """
    pred_frames = list(pred_frames)
    gt_frames = list(gt_frames)
    if len(pred_frames) != len(gt_frames):
        raise MetricError(f"frame count mismatch: {len(pred_frames)} predictions "
                          f"vs {len(gt_frames)} ground truth")
    if not pred_frames:
        raise MetricError("empty clip")
    if ids is None:
        ids = [f"{i:05d}" for i in range(len(pred_frames))]

    rows = []
    psnr_vals = []
    ssim_vals = []
    for fid, pred, gt in zip(ids, pred_frames, gt_frames):
        p = psnr(pred, gt)
        s = ssim(luminance_of(pred) / 100.0, luminance_of(gt) / 100.0)
        rows.append({"id": fid, "psnr": "identical" if p is None else p, "ssim": s})
        if p is not None:
            psnr_vals.append(p)
        ssim_vals.append(s)

    report = {
        "frame_count": len(pred_frames),
        "psnr_mean": (sum(psnr_vals) / len(psnr_vals)) if psnr_vals else "identical",
        "ssim_mean": sum(ssim_vals) / len(ssim_vals),
        "cdc": cdc(pred_frames) if len(pred_frames) > max(CDC_STRIDES) else None,
        "frames": rows,
    }
    return report


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
