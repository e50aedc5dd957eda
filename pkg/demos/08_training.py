"""
Training on a synthetic clip
============================

A four-frame clip with static chroma and drifting luminance is enough to
watch the optimiser work: the clip's own endpoints serve as references, the
warp supplies a rough chroma estimate, and the network learns the residual.
Loss terms land in a CSV so a run can be inspected after the fact.
"""

import csv
import os
import tempfile

import numpy as np

from bistream.colorspace import lab_to_rgb
from bistream.config import RunConfig
from bistream.pipeline import load_clip, save_png, train

root = tempfile.mkdtemp(prefix="train_demo_")
frames_dir = os.path.join(root, "clip", "frames")
os.makedirs(frames_dir)

# static chroma field, luminance phase drifts frame to frame
H = W = 16
yy, xx = np.meshgrid(np.linspace(0, 1, H), np.linspace(0, 1, W), indexing="ij")
for t in range(4):
    ph = t / 8.0
    L = 45 + 18 * np.sin(2 * np.pi * (xx + ph)) * np.cos(np.pi * yy)
    a = 28 * np.sin(2 * np.pi * yy)
    b = 28 * np.cos(2 * np.pi * xx)
    rgb = lab_to_rgb(np.stack([L, a, b], axis=2))
    save_png(os.path.join(frames_dir, f"{t:03d}.png"), rgb)
print("clip:", sorted(os.listdir(frames_dir)))

cfg = RunConfig(epochs=60, batch_size=4, c_seg=4, msrb_base_channels=16,
                msrb_unet_depth=2, seed=0, loss_lambda_percep=0.0)
out_dir = os.path.join(root, "run")
result = train(os.path.join(root, "clip"), out_dir, cfg)
print(f"steps: {result['steps']}, final loss: {result['final_loss']:.4f}")

# -- the loss curve -----------------------------------------------------------------
with open(result["loss_curve"], newline="") as fh:
    rows = list(csv.DictReader(fh))
first, last = float(rows[0]["total"]), float(rows[-1]["total"])
print(f"\ntotal loss: {first:.3f} -> {last:.3f} "
      f"(ratio {last / first:.3f} over {len(rows)} steps)")
for row in rows[:: max(1, len(rows) // 6)]:
    bar = "#" * int(40 * float(row["total"]) / first)
    print(f"  step {int(row['step']):3d}  {float(row['total']):8.3f}  {bar}")

print("\nper-term at the last step:")
for term in ("edge", "hem", "content", "temporal"):
    print(f"  {term:10s} {float(rows[-1][term]):.4f}")

# -- what the run leaves behind -----------------------------------------------------
print("\nrun directory:", sorted(os.listdir(out_dir)))
ckpt = result["checkpoint"]
print("checkpoint tensors:", sum(1 for n in os.listdir(ckpt) if n.endswith(".btsr")))

# the trained weights plug straight back into inference
clip = load_clip(frames_dir, os.path.join(frames_dir, "000.png"),
                 os.path.join(frames_dir, "003.png"))
print("reloaded clip:", clip.n, "frames at", clip.hw)
