"""sRGB (D65) to CIE 1976 L*a*b* conversions.

All conversions are vectorised numpy on float32/float64 images with channels
last. `rgb_to_lab` rejects out-of-range input; `lab_to_rgb` clamps instead,
because values slightly outside the sRGB gamut are an expected product of
predicting chroma. `lab_to_rgb_t` is the same transform expressed in
differentiable primitive ops so a loss can see through the rendering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T

# sRGB -> XYZ (D65), IEC 61966-2-1 primaries at double precision
RGB_TO_XYZ = np.array([
    [0.41239079926595934, 0.357584339383878, 0.1804807884018343],
    [0.21263900587151027, 0.715168678767756, 0.07219231536073371],
    [0.01933081871559182, 0.11919477979462598, 0.9505321522496607],
])
XYZ_TO_RGB = np.linalg.inv(RGB_TO_XYZ)

# reference white: sRGB (1,1,1) mapped through the matrix above, so that
# pure white lands on L=100, a=b=0 exactly
WHITE = RGB_TO_XYZ.sum(axis=1)

_DELTA = 6.0 / 29.0
_DELTA3 = _DELTA ** 3
_COMP_LIN_MAX = 0.0031308   # linear-side companding threshold
_COMP_SRGB_MAX = 0.04045    # encoded-side companding threshold

AB_SCALE = 110.0  # normalisation divisor for chroma channels


def srgb_to_linear(u: np.ndarray) -> np.ndarray:
    safe = np.maximum(u, 0.0)
    return np.where(u <= _COMP_SRGB_MAX, u / 12.92,
                    np.power((safe + 0.055) / 1.055, 2.4))


def linear_to_srgb(u: np.ndarray) -> np.ndarray:
    safe = np.maximum(u, 0.0)
    return np.where(u <= _COMP_LIN_MAX, u * 12.92,
                    1.055 * np.power(safe, 1.0 / 2.4) - 0.055)


def _lab_f(t: np.ndarray) -> np.ndarray:
    safe = np.maximum(t, 0.0)
    return np.where(t > _DELTA3, np.cbrt(safe),
                    t / (3.0 * _DELTA ** 2) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA, t ** 3, 3.0 * _DELTA ** 2 * (t - 4.0 / 29.0))


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """(..., 3) sRGB in [0, 1] -> (..., 3) Lab; raises on out-of-range input."""
    rgb = np.asarray(rgb)
    if rgb.shape[-1] != 3:
        raise ValueError(f"rgb_to_lab: channels-last RGB required, got shape {rgb.shape}")
    if rgb.min() < 0.0 or rgb.max() > 1.0:
        raise ValueError(
            f"rgb_to_lab: values outside [0, 1] (min {rgb.min():g}, max {rgb.max():g})")
    lin = srgb_to_linear(rgb.astype(np.float64))
    xyz = lin @ RGB_TO_XYZ.T
    fx = _lab_f(xyz[..., 0] / WHITE[0])
    fy = _lab_f(xyz[..., 1] / WHITE[1])
    fz = _lab_f(xyz[..., 2] / WHITE[2])
    lab = np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)
    return lab.astype(rgb.dtype) if rgb.dtype in (np.float32, np.float64) else lab


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """(..., 3) Lab -> (..., 3) sRGB clamped into [0, 1]; never raises on gamut."""
    lab = np.asarray(lab)
    if lab.shape[-1] != 3:
        raise ValueError(f"lab_to_rgb: channels-last Lab required, got shape {lab.shape}")
    work = lab.astype(np.float64)
    fy = (work[..., 0] + 16.0) / 116.0
    fx = fy + work[..., 1] / 500.0
    fz = fy - work[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx) * WHITE[0],
                    _lab_f_inv(fy) * WHITE[1],
                    _lab_f_inv(fz) * WHITE[2]], axis=-1)
    rgb = np.clip(linear_to_srgb(xyz @ XYZ_TO_RGB.T), 0.0, 1.0)
    return rgb.astype(lab.dtype) if lab.dtype in (np.float32, np.float64) else rgb


def luminance_of(rgb: np.ndarray) -> np.ndarray:
    """L* channel of an sRGB image, range [0, 100]."""
    return rgb_to_lab(rgb)[..., 0]


# -- normalisation conventions ------------------------------------------------
# network inputs: L mapped to [-1, 1], ab divided by AB_SCALE

def normalize_l(l: np.ndarray) -> np.ndarray:
    return l / 50.0 - 1.0

def denormalize_l(l: np.ndarray) -> np.ndarray:
    return (l + 1.0) * 50.0

def normalize_ab(ab: np.ndarray) -> np.ndarray:
    return ab / AB_SCALE

def denormalize_ab(ab: np.ndarray) -> np.ndarray:
    return ab * AB_SCALE


@dataclass
class LabImage:
    """A colour image held as separate L (H, W) and ab (H, W, 2) planes."""
    l: np.ndarray
    ab: np.ndarray

    def __post_init__(self):
        self.l = np.asarray(self.l)
        self.ab = np.asarray(self.ab)
        if self.l.ndim != 2 or self.ab.ndim != 3 or self.ab.shape[2] != 2:
            raise ValueError(f"LabImage: need L (H,W) and ab (H,W,2), "
                             f"got {self.l.shape} and {self.ab.shape}")
        if self.l.shape != self.ab.shape[:2]:
            raise ValueError(f"LabImage: plane size mismatch {self.l.shape} "
                             f"vs {self.ab.shape[:2]}")

    @property
    def shape(self):
        return self.l.shape

    @classmethod
    def from_rgb(cls, rgb: np.ndarray) -> "LabImage":
        lab = rgb_to_lab(rgb)
        return cls(lab[..., 0], lab[..., 1:])

    def to_rgb(self) -> np.ndarray:
        return lab_to_rgb(np.concatenate([self.l[..., None], self.ab], axis=2))


# -- differentiable rendering --------------------------------------------------

def _masked_branch(mask: np.ndarray, high: T.Tensor, low: T.Tensor) -> T.Tensor:
    m = T.constant(mask.astype(high.data.dtype))
    inv = T.constant((1.0 - mask).astype(high.data.dtype))
    return T.add(T.mul(m, high), T.mul(inv, low))


def lab_to_rgb_t(lab: T.Tensor) -> T.Tensor:
    """Differentiable Lab -> sRGB for an (H, W, 3) tensor.

    Matches `lab_to_rgb` up to float precision; the piecewise branch masks are
    taken from the forward values, so gradients follow the active branch.
    """
    if lab.data.ndim != 3 or lab.data.shape[2] != 3:
        raise T.ShapeError(f"lab_to_rgb_t: (H, W, 3) required, got {lab.data.shape}")
    h, w, _ = lab.data.shape
    L = T.slice_axis(lab, 2, 0, 1)
    a = T.slice_axis(lab, 2, 1, 2)
    b = T.slice_axis(lab, 2, 2, 3)

    fy = T.scalar_mul(L + 16.0, 1.0 / 116.0)
    fx = T.add(fy, T.scalar_mul(a, 1.0 / 500.0))
    fz = T.sub(fy, T.scalar_mul(b, 1.0 / 200.0))

    def f_inv(ft: T.Tensor) -> T.Tensor:
        cube = T.mul(T.square(ft), ft)
        lin = T.scalar_mul(ft - 4.0 / 29.0, 3.0 * _DELTA ** 2)
        return _masked_branch(ft.data > _DELTA, cube, lin)

    xyz = T.concat([T.scalar_mul(f_inv(fx), WHITE[0]),
                    T.scalar_mul(f_inv(fy), WHITE[1]),
                    T.scalar_mul(f_inv(fz), WHITE[2])], axis=2)

    flat = T.reshape(xyz, (h * w, 3))
    lin_rgb = T.reshape(T.matmul(flat, T.constant(XYZ_TO_RGB.T.astype(lab.data.dtype))),
                        (h, w, 3))

    low = T.scalar_mul(lin_rgb, 12.92)
    powed = T.powc(T.clamp(lin_rgb, 0.0, float("inf")), 1.0 / 2.4)
    high = T.scalar_mul(powed, 1.055) - 0.055
    srgb = _masked_branch(lin_rgb.data > _COMP_LIN_MAX, high, low)
    return T.clamp(srgb, 0.0, 1.0)
