"""
Edge and segmentation priors
============================

The refinement network sees two guidance planes next to the warped colours:
a segmentation distribution (against bleeding across objects) and an edge
map (against bleeding across contours). Both fall back to built-ins when no
sidecar files exist.
"""

import os
import tempfile

import numpy as np

from bistream.btsr import write_btsr
from bistream.priors import (edge_sidecar, load_masks, seg_sidecar,
                             sobel_edge_map)

# a dark square on a bright ground
l_plane = np.full((12, 12), 80.0)
l_plane[3:9, 3:9] = 20.0

edge = sobel_edge_map(l_plane)
print("edge map, one row through the square (column strength):")
print(" ".join(f"{v:.2f}" for v in edge[5]))
print("flat regions are exactly zero:", edge[0, 0] == 0.0)

# with no sidecars both priors fall back
p = load_masks(l_plane, seg_path=None, edge_path=None, c_seg=5)
print("\nfallback sources:", p.seg_source, "/", p.edge_source)
print("uniform class mass:", p.seg[0, 0])

# imported sidecars replace the fallbacks after validation
workdir = tempfile.mkdtemp(prefix="priors_demo_")
rng = np.random.default_rng(0)
raw = rng.uniform(0.05, 1.0, size=(12, 12, 5)).astype(np.float32)
seg = raw / raw.sum(axis=2, keepdims=True)
write_btsr(seg_sidecar(workdir, "frame0"), seg)
write_btsr(edge_sidecar(workdir, "frame0"), edge)

p = load_masks(l_plane, seg_sidecar(workdir, "frame0"),
               edge_sidecar(workdir, "frame0"), c_seg=5)
print("\nimported sources:", p.seg_source, "/", p.edge_source)
print("class sums renormalised:", np.abs(p.seg.sum(axis=2) - 1).max())

# malformed files are refused, not silently patched
bad = np.full((12, 12, 5), 0.3, dtype=np.float32)   # rows sum to 1.5
write_btsr(seg_sidecar(workdir, "frame1"), bad)
try:
    load_masks(l_plane, seg_sidecar(workdir, "frame1"), None, c_seg=5)
except Exception as exc:
    print("\nrejected bad sidecar:", exc)
