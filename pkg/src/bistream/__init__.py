"""Exemplar-based video colorization.

Grayscale frames are matched against one or two colour reference exemplars
by dense semantic correspondence; the warped colours from both references
are fused along the clip's timeline and refined coarse-to-fine by a
prior-guided recurrent network. Built on a small numpy autodiff core.
"""

from .btfb import fuse, temporal_weights
from .btsr import read_btsr, write_btsr
from .colorspace import LabImage, lab_to_rgb, rgb_to_lab
from .config import RunConfig, parse_config
from .correspondence import build_correspondence, upsample_warp, warp_colors
from .features import FeatureExtractor, FeaturePyramid, import_pyramid
from .losses import LossWeights, total_loss
from .metrics import cdc, eval_report, psnr, ssim
from .msrb import MsrbConfig, init_msrb, load_checkpoint, msrb_forward, save_checkpoint
from .pipeline import Clip, colorize_clip, evaluate, load_clip, train
from .priors import load_masks, sobel_edge_map
from .tensor import Tensor, backward, finite_difference_check

__version__ = "0.1.0"

__all__ = [
    "Clip", "FeatureExtractor", "FeaturePyramid", "LabImage", "LossWeights",
    "MsrbConfig", "RunConfig", "Tensor", "backward", "build_correspondence",
    "cdc", "colorize_clip", "eval_report", "evaluate", "finite_difference_check",
    "fuse", "import_pyramid", "init_msrb", "lab_to_rgb", "load_checkpoint",
    "load_clip", "load_masks", "msrb_forward", "parse_config", "psnr",
    "read_btsr", "rgb_to_lab", "save_checkpoint", "sobel_edge_map", "ssim",
    "temporal_weights", "total_loss", "train", "upsample_warp",
    "warp_colors", "write_btsr",
]
