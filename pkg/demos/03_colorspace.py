"""
CIELAB in both directions
=========================

The pipeline predicts ab chroma under a fixed input luminance, so the Lab
conversions carry all image I/O. This walks the forward transform, the
inverse with gamut clamping, and the differentiable render used by the
perceptual loss.
"""

import numpy as np

from bistream import tensor as T
from bistream.colorspace import (LabImage, lab_to_rgb, lab_to_rgb_t,
                                 rgb_to_lab)

# primaries and greys
for name, rgb in [("white", (1, 1, 1)), ("black", (0, 0, 0)),
                  ("red", (1, 0, 0)), ("green", (0, 1, 0)),
                  ("blue", (0, 0, 1)), ("mid grey", (0.5, 0.5, 0.5))]:
    lab = rgb_to_lab(np.array(rgb, dtype=np.float64))
    print(f"{name:>8}: L={lab[0]:7.3f}  a={lab[1]:8.3f}  b={lab[2]:8.3f}")

# round trip accuracy over a coarse lattice
g = np.linspace(0, 1, 9)
grid = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
err = np.abs(lab_to_rgb(rgb_to_lab(grid)) - grid).max()
print(f"\nround trip max error over {len(grid)} colours: {err:.2e}")

# out-of-gamut Lab clamps instead of failing
wild = np.array([[60.0, 120.0, -120.0]])
print("out-of-gamut Lab -> rgb:", lab_to_rgb(wild)[0])

# LabImage separates the L plane (fixed input) from ab (the prediction)
rng = np.random.default_rng(0)
img = LabImage.from_rgb(rng.uniform(0, 1, size=(4, 4, 3)))
print("\nLabImage planes:", img.l.shape, img.ab.shape)

# the differentiable render agrees with the numpy path and carries gradients
lab = rgb_to_lab(rng.uniform(0.1, 0.9, size=(4, 4, 3)))
t_in = T.tensor(lab, requires_grad=True)
rendered = lab_to_rgb_t(t_in)
print("render matches:", np.abs(rendered.data - lab_to_rgb(lab)).max())
grads = T.backward(T.tmean(rendered))
print("gradient shape at the Lab input:", grads[t_in.node_id].data.shape)
