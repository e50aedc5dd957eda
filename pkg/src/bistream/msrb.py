"""Prior-guided multi-scale recurrent refinement of the fused colour map.

The network runs three times over a pyramid of the assembled input: coarsest
first at 1/4 scale, then 1/2, then full resolution, each pass conditioned on
the upsampled chroma estimate of the pass before. Every pass predicts a
residual on top of the fused warped chroma at its own scale and clamps the
result into the representable ab range, so an all-zero network is the
identity on the warped colours.

Input channel layout, fixed (see `assemble_input`):
    0      luminance, mapped to [-1, 1]
    1..2   fused warped ab, divided by the ab scale
    3..    segmentation class probabilities (c_seg channels)
    last   edge strength in [0, 1]
The recurrent passes at 1/2 and full scale append 2 more channels carrying
the upsampled previous estimate.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .btsr import read_btsr, write_btsr
from .colorspace import AB_SCALE, normalize_ab, normalize_l

AB_LO = -128.0 / AB_SCALE   # clamp bounds in normalised ab units
AB_HI = 127.0 / AB_SCALE

_CHANNEL_CAP_MULT = 8       # widest layer is 8x base_channels


class MsrbError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass
class MsrbConfig:
    base_channels: int = 32
    unet_depth: int = 3
    c_seg: int = 19
    share_level_weights: bool = False

    def __post_init__(self):
        if self.base_channels < 1 or self.unet_depth < 1 or self.c_seg < 1:
            raise MsrbError(f"bad config: {self}")

    @property
    def in_channels(self) -> int:
        return 4 + self.c_seg

    def level_prefix(self, level: int) -> str:
        return "shared" if self.share_level_weights else f"l{level}"

    def level_in_channels(self, level: int) -> int:
        if self.share_level_weights:
            return self.in_channels + 2   # recurrent channels always present
        return self.in_channels if level == 3 else self.in_channels + 2


def assemble_input(x_l: np.ndarray, p_ab: np.ndarray, seg: np.ndarray,
                   edge: np.ndarray) -> np.ndarray:
    """Stack (H, W, 4 + c_seg): [L norm, ab norm, seg..., edge]."""
    x_l = np.asarray(x_l, dtype=np.float32)
    p_ab = np.asarray(p_ab, dtype=np.float32)
    seg = np.asarray(seg, dtype=np.float32)
    edge = np.asarray(edge, dtype=np.float32)
    hw = x_l.shape
    if x_l.ndim != 2:
        raise MsrbError(f"luminance plane must be (H, W), got {x_l.shape}")
    if p_ab.shape != (*hw, 2):
        raise MsrbError(f"warped ab shape {p_ab.shape}, expected {(*hw, 2)}")
    if seg.ndim != 3 or seg.shape[:2] != hw:
        raise MsrbError(f"segmentation shape {seg.shape}, expected {hw} x c_seg")
    if edge.shape != hw:
        raise MsrbError(f"edge shape {edge.shape}, expected {hw}")
    return np.concatenate([normalize_l(x_l)[..., None], normalize_ab(p_ab),
                           seg, edge[..., None]], axis=2)


# -- parameters ----------------------------------------------------------------

def _unet_plan(config: MsrbConfig, in_ch: int):
    """(name, kh, cin, cout, stride) conv descriptions, encoder then decoder."""
    base = config.base_channels
    cap = base * _CHANNEL_CAP_MULT
    plan = [("stem", 3, in_ch, base, 1)]
    widths = [base]
    for d in range(config.unet_depth):
        cin = widths[-1]
        cout = min(cin * 2, cap)
        plan.append((f"down{d}", 3, cin, cout, 2))
        widths.append(cout)
    for d in range(config.unet_depth - 1, -1, -1):
        skip = widths[d]
        cin = widths[d + 1] + skip
        plan.append((f"up{d}", 3, cin, skip, 1))
    plan.append(("head", 1, base, 2, 1))
    return plan


def _level_plans(config: MsrbConfig):
    levels = [3] if config.share_level_weights else [3, 2, 1]
    return {config.level_prefix(lv): _unet_plan(config, config.level_in_channels(lv))
            for lv in levels}


def _orthogonal_conv(rng, kh, cin, cout, gain):
    fan = kh * kh * cin
    a = rng.standard_normal((max(fan, cout), min(fan, cout)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if fan < cout:
        q = q.T
    return (gain * q[:fan, :cout]).reshape(kh, kh, cin, cout).astype(np.float32)


def init_msrb(config: MsrbConfig, seed: int = 0) -> dict[str, T.Tensor]:
    """Orthogonal conv weights, zero biases; the residual head starts at zero
    so an untrained network reproduces the warped colours exactly."""
    rng = np.random.default_rng(seed)
    params: dict[str, T.Tensor] = {}
    for prefix, plan in _level_plans(config).items():
        for name, kh, cin, cout, _ in plan:
            if name == "head":
                w = np.zeros((kh, kh, cin, cout), dtype=np.float32)
            else:
                w = _orthogonal_conv(rng, kh, cin, cout, np.sqrt(2.0))
            params[f"{prefix}.{name}.w"] = T.tensor(w, requires_grad=True)
            params[f"{prefix}.{name}.b"] = T.tensor(np.zeros(cout, dtype=np.float32),
                                                    requires_grad=True)
    return params


def zero_msrb(config: MsrbConfig) -> dict[str, T.Tensor]:
    params = init_msrb(config, seed=0)
    return {name: T.tensor(np.zeros_like(p.data), requires_grad=True)
            for name, p in params.items()}


# -- forward ---------------------------------------------------------------------

def _unet_forward(params, prefix, config, x: T.Tensor) -> T.Tensor:
    def conv(tag, inp, stride):
        return T.conv2d(inp, params[f"{prefix}.{tag}.w"], params[f"{prefix}.{tag}.b"],
                        stride=stride, pad="same")

    cur = T.relu(conv("stem", x, 1))
    skips = [cur]
    for d in range(config.unet_depth):
        cur = T.relu(conv(f"down{d}", cur, 2))
        skips.append(cur)
    for d in range(config.unet_depth - 1, -1, -1):
        skip = skips[d]
        up = T.bilinear_resample(cur, skip.data.shape[:2])
        cur = T.relu(conv(f"up{d}", T.concat([up, skip], axis=2), 1))
    return conv("head", cur, 1)


def msrb_forward(params: dict[str, T.Tensor], config: MsrbConfig, x):
    """Coarse-to-fine refinement. Returns (z_full, z_half, z_quarter), each an
    (h, w, 2) tensor of normalised ab. H and W must be divisible by 4; the
    pipeline pads frames with edge replication and crops afterwards."""
    if not isinstance(x, T.Tensor):
        x = T.constant(np.asarray(x, dtype=np.float32))
    if x.data.ndim != 3 or x.data.shape[2] != config.in_channels:
        raise MsrbError(f"assembled input must be (H, W, {config.in_channels}), "
                        f"got {x.data.shape}")
    H, W, _ = x.data.shape
    if H % 4 or W % 4:
        raise MsrbError(f"refinement needs H, W divisible by 4, got {(H, W)}")

    def level_pass(level, scale_div, recurrent):
        inp = T.bilinear_resample(x, (H // scale_div, W // scale_div)) \
            if scale_div > 1 else x
        p_ab = T.slice_axis(inp, 2, 1, 3)
        if recurrent is None:
            if config.share_level_weights:
                pad = T.constant(np.zeros((*inp.data.shape[:2], 2), dtype=np.float32))
                net_in = T.concat([inp, pad], axis=2)
            else:
                net_in = inp
        else:
            prev = T.bilinear_resample(recurrent, inp.data.shape[:2])
            net_in = T.concat([inp, prev], axis=2)
        residual = _unet_forward(params, config.level_prefix(level), config, net_in)
        return T.clamp(T.add(p_ab, residual), AB_LO, AB_HI)

    z_quarter = level_pass(3, 4, None)
    z_half = level_pass(2, 2, z_quarter)
    z_full = level_pass(1, 1, z_half)
    return z_full, z_half, z_quarter


# -- checkpoints -------------------------------------------------------------------

_MANIFEST = "manifest.txt"
_DTYPE_NAMES = {np.dtype(np.float32): "f32", np.dtype(np.float64): "f64"}
_NAME_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


def _shape_str(shape) -> str:
    return "x".join(str(d) for d in shape)


def save_checkpoint(directory, params: dict[str, T.Tensor]) -> None:
    """One BTSR file per named tensor plus a manifest of name/shape/dtype/file."""
    os.makedirs(directory, exist_ok=True)
    lines = []
    for name in sorted(params):
        if not _NAME_RE.match(name):
            raise CheckpointError(f"parameter name {name!r} not manifest-safe")
        arr = params[name].data if isinstance(params[name], T.Tensor) else np.asarray(params[name])
        if arr.ndim == 0:
            arr = arr.reshape(1)
        fname = f"{name}.btsr"
        write_btsr(os.path.join(directory, fname), arr)
        lines.append(f"{name} {_shape_str(arr.shape)} {_DTYPE_NAMES[arr.dtype]} {fname}")
    with open(os.path.join(directory, _MANIFEST), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(directory) -> dict[str, np.ndarray]:
    manifest = os.path.join(directory, _MANIFEST)
    if not os.path.exists(manifest):
        raise CheckpointError(f"{directory}: no {_MANIFEST}")
    out: dict[str, np.ndarray] = {}
    with open(manifest, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise CheckpointError(f"{manifest}:{lineno}: expected "
                                      f"'name shape dtype file', got {line!r}")
            name, shape_s, dtype_s, fname = parts
            arr = read_btsr(os.path.join(directory, fname))
            if _shape_str(arr.shape) != shape_s:
                raise CheckpointError(f"{manifest}:{lineno}: {fname} has shape "
                                      f"{_shape_str(arr.shape)}, manifest says {shape_s}")
            if _DTYPE_NAMES[arr.dtype] != dtype_s:
                raise CheckpointError(f"{manifest}:{lineno}: {fname} is "
                                      f"{_DTYPE_NAMES[arr.dtype]}, manifest says {dtype_s}")
            if name in out:
                raise CheckpointError(f"{manifest}:{lineno}: duplicate entry {name}")
            out[name] = arr
    return out


def restore_params(config: MsrbConfig, directory) -> dict[str, T.Tensor]:
    """Checkpoint -> trainable parameter dict; names and shapes must match."""
    stored = load_checkpoint(directory)
    fresh = init_msrb(config, seed=0)
    missing = sorted(set(fresh) - set(stored))
    surplus = sorted(set(stored) - set(fresh))
    if missing or surplus:
        raise CheckpointError(f"{directory}: parameter names do not match the "
                              f"configured model (missing {missing}, surplus {surplus})")
    out = {}
    for name, ref in fresh.items():
        arr = stored[name]
        if arr.shape != ref.data.shape:
            raise CheckpointError(f"{directory}: {name} has shape {arr.shape}, "
                                  f"model expects {ref.data.shape}")
        out[name] = T.tensor(arr.astype(np.float32), requires_grad=True)
    return out
