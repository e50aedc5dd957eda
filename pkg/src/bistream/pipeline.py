"""End-to-end orchestration: clip loading, colorization, training, evaluation.

A clip is a directory of grayscale-or-colour PNG frames (sorted by filename)
plus one or two colour reference exemplars. Colorization runs per frame:

    features -> correspondence vs each reference -> colour warp ->
    temporal fusion of the two warps -> priors -> multi-scale refinement

Training consumes colour clips, using each clip's own first and last frame
as the references, and fits the refinement network with Adam. Everything is
deterministic for a fixed seed; BISTREAM_THREADS > 1 only parallelises the
per-frame loop, whose iterations are independent, so outputs do not change.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from . import tensor as T
from .btfb import fuse
from .btsr import read_btsr
from .colorspace import AB_SCALE, LabImage, lab_to_rgb
from .config import ConfigError, RunConfig
from .correspondence import build_correspondence, upsample_warp, warp_colors
from .features import FeatureExtractor, import_pyramid
from .losses import total_loss
from .metrics import eval_report, write_report
from .msrb import assemble_input, init_msrb, msrb_forward
from .msrb import save_checkpoint
from .priors import edge_sidecar, load_masks, seg_sidecar


class PipelineError(RuntimeError):
    pass


def thread_count() -> int:
    """Worker cap from BISTREAM_THREADS; 1 (the default) means fully serial."""
    raw = os.environ.get("BISTREAM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"BISTREAM_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


# -- image and clip I/O --------------------------------------------------------

def load_png(path, resize_hw=None) -> np.ndarray:
    """PNG -> (H, W, 3) float64 RGB in [0, 1]."""
    with Image.open(path) as img:
        img = img.convert("RGB")
        if resize_hw is not None:
            img = img.resize((resize_hw[1], resize_hw[0]), Image.BILINEAR)
        return np.asarray(img, dtype=np.float64) / 255.0


def save_png(path, rgb: np.ndarray) -> None:
    data = np.clip(np.round(np.asarray(rgb) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data).save(path)


@dataclass
class Clip:
    frames_l: list          # per-frame (H, W) float64 L* in [0, 100]
    ids: list
    ref_first: LabImage
    ref_last: LabImage | None
    ref_first_id: str = "ref_first"
    ref_last_id: str = "ref_last"

    @property
    def n(self) -> int:
        return len(self.frames_l)

    @property
    def hw(self):
        return self.frames_l[0].shape


def _png_listing(directory):
    if not os.path.isdir(directory):
        raise PipelineError(f"not a directory: {directory}")
    names = sorted(n for n in os.listdir(directory) if n.lower().endswith(".png"))
    if not names:
        raise PipelineError(f"no PNG frames in {directory}")
    return names


def load_clip(frames_dir, ref_first_path, ref_last_path=None,
              resize_hw=None) -> Clip:
    """Load frames (their luminance) and the reference exemplar(s)."""
    names = _png_listing(frames_dir)
    frames_l = []
    ids = []
    hw = None
    for name in names:
        rgb = load_png(os.path.join(frames_dir, name), resize_hw)
        if hw is None:
            hw = rgb.shape[:2]
        elif rgb.shape[:2] != hw:
            raise PipelineError(f"{name}: frame size {rgb.shape[:2]} differs "
                                f"from first frame {hw}")
        frames_l.append(LabImage.from_rgb(rgb).l)
        ids.append(os.path.splitext(name)[0])
    ref_first = LabImage.from_rgb(load_png(ref_first_path, resize_hw))
    ref_last = None
    if ref_last_path is not None:
        ref_last = LabImage.from_rgb(load_png(ref_last_path, resize_hw))
    clip = Clip(frames_l=frames_l, ids=ids, ref_first=ref_first, ref_last=ref_last,
                ref_first_id=os.path.splitext(os.path.basename(ref_first_path))[0],
                ref_last_id=(os.path.splitext(os.path.basename(ref_last_path))[0]
                             if ref_last_path else "ref_last"))
    if clip.ref_last is not None and clip.n < 2:
        raise PipelineError("bidirectional fusion needs at least 2 frames; "
                            "drop the second reference for a single-frame clip")
    return clip


# -- colorization ----------------------------------------------------------------

@dataclass
class FrameDetail:
    """Intermediates kept for inspection when asked."""
    p_ab: np.ndarray
    w_f: np.ndarray
    w_b: np.ndarray | None
    z_ab: np.ndarray


def _frame_pyramid(extractor, features_dir, frame_id, l_plane):
    if features_dir is not None:
        return import_pyramid(features_dir, frame_id, l_plane.shape)
    return extractor.extract_luminance(l_plane)


def _ref_small_ab(ref: LabImage, grid_hw) -> np.ndarray:
    small = T.bilinear_resample(T.constant(ref.ab.astype(np.float32)), grid_hw)
    return small.data


def warp_from_reference(pyramid, ref_pyramid, ref: LabImage, out_hw,
                        cfg: RunConfig) -> np.ndarray:
    """One reference's contribution: match, pull chroma, lift to frame size."""
    fmap = pyramid.level(cfg.match_level).fmap
    ref_fmap = ref_pyramid.level(cfg.match_level).fmap
    corr = build_correspondence(fmap, ref_fmap, cfg.temperature, cfg.tile_rows)
    small = warp_colors(corr, _ref_small_ab(ref, corr.ref_hw))
    return upsample_warp(small, out_hw)


def colorize_clip(clip: Clip, params, cfg: RunConfig, priors_dir=None,
                  features_dir=None, keep_intermediates=False):
    """Colorize every frame. Returns (rgb frames, FrameDetail list or None).

    With a single reference the fused map is the forward warp itself; with
    two references the blend weights follow the frame's temporal position.
    """
    if clip.ref_last is not None and clip.n < 2:
        raise PipelineError("bidirectional fusion needs at least 2 frames")
    mcfg = cfg.msrb_config()
    extractor = None if features_dir is not None else FeatureExtractor(seed=cfg.seed)

    ref_f_pyr = _frame_pyramid(extractor, features_dir, clip.ref_first_id,
                               clip.ref_first.l)
    ref_b_pyr = None
    if clip.ref_last is not None:
        ref_b_pyr = _frame_pyramid(extractor, features_dir, clip.ref_last_id,
                                   clip.ref_last.l)
    H, W = clip.hw
    pad_h = (-H) % 4
    pad_w = (-W) % 4

    def one_frame(t):
        frame_id = clip.ids[t]
        try:
            l_plane = clip.frames_l[t]
            pyramid = _frame_pyramid(extractor, features_dir, frame_id, l_plane)
            w_f = warp_from_reference(pyramid, ref_f_pyr, clip.ref_first, (H, W), cfg)
            if ref_b_pyr is None:
                w_b = None
                p_ab = w_f
            else:
                w_b = warp_from_reference(pyramid, ref_b_pyr, clip.ref_last, (H, W), cfg)
                p_ab = fuse(w_f, w_b, t, clip.n, cfg.btfb_equation_literal)
            pri = load_masks(
                l_plane,
                seg_sidecar(priors_dir, frame_id) if priors_dir else None,
                edge_sidecar(priors_dir, frame_id) if priors_dir else None,
                c_seg=cfg.c_seg)
            net_in = assemble_input(l_plane, p_ab, pri.seg, pri.edge)
            if pad_h or pad_w:
                net_in = np.pad(net_in, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")
            z_full, _, _ = msrb_forward(params, mcfg, net_in)
            z_ab = z_full.data[:H, :W].astype(np.float64) * AB_SCALE
            z_lab = np.concatenate([l_plane[..., None], z_ab], axis=2)
            rgb = lab_to_rgb(z_lab)
            detail = FrameDetail(p_ab=p_ab, w_f=w_f, w_b=w_b, z_ab=z_ab) \
                if keep_intermediates else None
            return rgb, detail
        except Exception as exc:
            raise PipelineError(f"frame {frame_id}: {exc}") from exc

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_frame, range(clip.n)))
    else:
        results = [one_frame(t) for t in range(clip.n)]
    frames = [r[0] for r in results]
    details = [r[1] for r in results] if keep_intermediates else None
    return frames, details


def colorize_to_dir(clip: Clip, params, cfg: RunConfig, out_dir,
                    priors_dir=None, features_dir=None) -> list:
    frames, _ = colorize_clip(clip, params, cfg, priors_dir, features_dir)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for frame_id, rgb in zip(clip.ids, frames):
        path = os.path.join(out_dir, f"{frame_id}.png")
        save_png(path, rgb)
        paths.append(path)
    return paths


# -- training ----------------------------------------------------------------------

class Adam:
    """Standard Adam with bias correction."""

    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self._v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self, grads_by_node: dict) -> None:
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.step_count
        bc2 = 1.0 - b2 ** self.step_count
        for name, p in self.params.items():
            g_t = grads_by_node.get(p.node_id)
            if g_t is None:
                continue
            g = g_t.data
            m = self._m[name]
            v = self._v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass
class TrainClip:
    """Precomputed, model-independent per-frame training inputs."""
    ids: list
    l_planes: list            # raw L*, float64 (H, W)
    y_ab: list                # raw ground-truth chroma (H, W, 2)
    net_inputs: list          # assembled (H, W, 4 + c_seg) float32
    flows: list               # per-frame (H, W, 2) flow to the previous frame, or None


def _discover_clip_dirs(data_root):
    if os.path.isdir(os.path.join(data_root, "frames")):
        return [data_root]
    subs = sorted(os.path.join(data_root, d) for d in os.listdir(data_root)
                  if os.path.isdir(os.path.join(data_root, d, "frames")))
    if not subs:
        raise PipelineError(f"{data_root}: no clip directories with a frames/ folder")
    return subs


def _prepare_train_clip(clip_dir, cfg: RunConfig) -> TrainClip:
    frames_dir = os.path.join(clip_dir, "frames")
    names = _png_listing(frames_dir)
    if len(names) < 2:
        raise PipelineError(f"{clip_dir}: training clips need at least 2 frames")
    resize_hw = cfg.resize_hw()
    labs = []
    ids = []
    hw = None
    for name in names:
        rgb = load_png(os.path.join(frames_dir, name), resize_hw)
        if hw is None:
            hw = rgb.shape[:2]
        elif rgb.shape[:2] != hw:
            raise PipelineError(f"{clip_dir}/{name}: frame size {rgb.shape[:2]} "
                                f"differs from first frame {hw}")
        labs.append(LabImage.from_rgb(rgb))
        ids.append(os.path.splitext(name)[0])
    if hw[0] % 4 or hw[1] % 4:
        raise PipelineError(f"{clip_dir}: training frames must have H, W "
                            f"divisible by 4, got {hw}; set resize")

    # the clip's own endpoints act as the two references
    ref_first, ref_last = labs[0], labs[-1]
    extractor = FeatureExtractor(seed=cfg.seed)
    ref_f_pyr = extractor.extract_luminance(ref_first.l)
    ref_b_pyr = extractor.extract_luminance(ref_last.l)

    net_inputs = []
    flows = []
    n = len(labs)
    for t, lab in enumerate(labs):
        pyramid = extractor.extract_luminance(lab.l)
        w_f = warp_from_reference(pyramid, ref_f_pyr, ref_first, hw, cfg)
        w_b = warp_from_reference(pyramid, ref_b_pyr, ref_last, hw, cfg)
        p_ab = fuse(w_f, w_b, t, n, cfg.btfb_equation_literal)
        pri = load_masks(lab.l, None, None, c_seg=cfg.c_seg)
        net_inputs.append(assemble_input(lab.l, p_ab, pri.seg, pri.edge))
        flow_path = os.path.join(clip_dir, "flow", f"{ids[t]}_flow.btsr")
        flows.append(read_btsr(flow_path) if os.path.exists(flow_path) else None)
    return TrainClip(ids=ids, l_planes=[lab.l for lab in labs],
                     y_ab=[lab.ab for lab in labs], net_inputs=net_inputs,
                     flows=flows)


def train(data_root, out_dir, cfg: RunConfig) -> dict:
    """Fit the refinement network on colour clips under `data_root`.

    One step visits a window of up to batch_size consecutive frames of one
    clip; an epoch is one step per clip. Writes out_dir/loss_curve.csv and a
    checkpoint at every epoch boundary (out_dir/checkpoint/), which for
    epochs = 0 is the untouched initialisation.
    """
    clip_dirs = _discover_clip_dirs(data_root)
    clips = [_prepare_train_clip(d, cfg) for d in clip_dirs]
    mcfg = cfg.msrb_config()
    params = init_msrb(mcfg, seed=cfg.seed)
    weights = cfg.loss_weights()
    percep = FeatureExtractor(seed=cfg.seed, in_channels=3) \
        if weights.lambda_percep > 0 else None
    opt = Adam(params, lr=cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)

    os.makedirs(out_dir, exist_ok=True)
    ckpt_dir = os.path.join(out_dir, "checkpoint")
    csv_path = os.path.join(out_dir, "loss_curve.csv")
    columns = ["step", "total", "edge", "hem", "content", "perceptual", "temporal"]

    total_steps = cfg.epochs * len(clips)
    last_total = math.nan
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for step in range(total_steps):
            clip = clips[step % len(clips)]
            n = len(clip.ids)
            window = min(cfg.batch_size, n)
            start = int(rng.integers(0, n - window + 1))

            frame_losses = []
            sums = {c: 0.0 for c in columns[1:]}
            prev_z = None
            for t in range(start, start + window):
                z_full, _, _ = msrb_forward(params, mcfg, clip.net_inputs[t])
                z_ab = T.scalar_mul(z_full, AB_SCALE)
                l_const = T.constant(clip.l_planes[t].astype(np.float32)[..., None])
                z_lab = T.concat([l_const, z_ab], axis=2)
                y_lab = np.concatenate([clip.l_planes[t][..., None], clip.y_ab[t]],
                                       axis=2).astype(np.float32)
                loss_t, parts = total_loss(
                    clip.l_planes[t], z_lab, y_lab, weights,
                    percep_extractor=percep,
                    z_prev_ab=prev_z,
                    flow=clip.flows[t] if prev_z is not None else None)
                frame_losses.append(loss_t)
                prev_z = z_ab
                for c in sums:
                    sums[c] += parts[c]

            window_loss = frame_losses[0]
            for extra in frame_losses[1:]:
                window_loss = T.add(window_loss, extra)
            window_loss = T.scalar_mul(window_loss, 1.0 / window)

            last_total = window_loss.item()
            if not math.isfinite(last_total):
                raise PipelineError(f"training diverged at step {step}: "
                                    f"loss {last_total}")
            grads = T.backward(window_loss)
            opt.step(grads)
            writer.writerow([step] + [sums[c] / window for c in columns[1:]])

            if (step + 1) % len(clips) == 0:
                save_checkpoint(ckpt_dir, params)
    save_checkpoint(ckpt_dir, params)
    return {"steps": total_steps, "final_loss": last_total,
            "checkpoint": ckpt_dir, "loss_curve": csv_path}


# -- evaluation ---------------------------------------------------------------------

def evaluate(pred_dir, gt_dir, report_path=None) -> dict:
    pred_names = _png_listing(pred_dir)
    gt_names = _png_listing(gt_dir)
    if len(pred_names) != len(gt_names):
        raise PipelineError(f"frame count mismatch: {len(pred_names)} predictions "
                            f"in {pred_dir}, {len(gt_names)} ground-truth frames "
                            f"in {gt_dir}")
    preds = [load_png(os.path.join(pred_dir, n)) for n in pred_names]
    gts = [load_png(os.path.join(gt_dir, n)) for n in gt_names]
    for name, p, g in zip(pred_names, preds, gts):
        if p.shape != g.shape:
            raise PipelineError(f"{name}: prediction shape {p.shape} differs "
                                f"from ground truth {g.shape}")
    report = eval_report(preds, gts, ids=[os.path.splitext(n)[0] for n in pred_names])
    if report_path is not None:
        write_report(report, report_path)
    return report
