"""Command-line entry points.

    bistream colorize --frames DIR --ref-first PNG [--ref-last PNG] --out DIR
                      [--config FILE] [--features-dir DIR] [--priors-dir DIR]
                      [--ckpt DIR]
    bistream train    --data DIR --out DIR [--config FILE]
    bistream eval     --pred DIR --gt DIR --report FILE
    bistream gradcheck [--seed N]

Exit codes: 0 on success, 2 on usage errors, 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import sys

from . import gradcheck
from .config import RunConfig, parse_config
from .msrb import init_msrb, restore_params
from .pipeline import colorize_to_dir, evaluate, load_clip, train


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bistream",
        description="Exemplar-based video colorization with bidirectional "
                    "reference fusion and multi-scale refinement.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_col = sub.add_parser("colorize", help="colorize a clip against reference exemplars")
    p_col.add_argument("--frames", required=True, help="directory of grayscale PNG frames")
    p_col.add_argument("--ref-first", required=True, help="colour exemplar for the clip start")
    p_col.add_argument("--ref-last", default=None,
                       help="colour exemplar for the clip end (omit for single-reference mode)")
    p_col.add_argument("--out", required=True, help="output directory for colorized PNGs")
    p_col.add_argument("--config", default=None, help="flat key = value config file")
    p_col.add_argument("--features-dir", default=None,
                       help="directory of externally computed feature sidecars (BTSR)")
    p_col.add_argument("--priors-dir", default=None,
                       help="directory of segmentation/edge sidecars (BTSR)")
    p_col.add_argument("--ckpt", default=None, help="checkpoint directory of a trained model")

    p_train = sub.add_parser("train", help="fit the refinement network on colour clips")
    p_train.add_argument("--data", required=True, help="directory of training clips")
    p_train.add_argument("--out", required=True, help="output directory (checkpoint, loss curve)")
    p_train.add_argument("--config", default=None)

    p_eval = sub.add_parser("eval", help="score predicted frames against ground truth")
    p_eval.add_argument("--pred", required=True, help="directory of predicted PNGs")
    p_eval.add_argument("--gt", required=True, help="directory of ground-truth PNGs")
    p_eval.add_argument("--report", required=True, help="where to write the JSON report")

    p_grad = sub.add_parser("gradcheck", help="finite-difference check of every primitive op")
    p_grad.add_argument("--seed", type=int, default=0)
    return parser


def _load_config(path) -> RunConfig:
    return parse_config(path) if path else RunConfig()


def _cmd_colorize(args) -> int:
    cfg = _load_config(args.config)
    clip = load_clip(args.frames, args.ref_first, args.ref_last, cfg.resize_hw())
    mcfg = cfg.msrb_config()
    params = restore_params(mcfg, args.ckpt) if args.ckpt else init_msrb(mcfg, cfg.seed)
    paths = colorize_to_dir(clip, params, cfg, args.out,
                            priors_dir=args.priors_dir,
                            features_dir=args.features_dir)
    print(f"colorized {len(paths)} frames -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    summary = train(args.data, args.out, cfg)
    print(f"trained {summary['steps']} steps, final loss {summary['final_loss']:.6f}")
    print(f"checkpoint: {summary['checkpoint']}")
    print(f"loss curve: {summary['loss_curve']}")
    return 0


def _cmd_eval(args) -> int:
    report = evaluate(args.pred, args.gt, args.report)
    psnr = report["psnr_mean"]
    psnr_s = psnr if isinstance(psnr, str) else f"{psnr:.4f}"
    cdc = report["cdc"]
    cdc_s = "n/a" if cdc is None else f"{cdc:.6f}"
    print(f"frames: {report['frame_count']}  psnr: {psnr_s}  "
          f"ssim: {report['ssim_mean']:.6f}  cdc: {cdc_s}")
    print(f"report: {args.report}")
    return 0


def _cmd_gradcheck(args) -> int:
    results = gradcheck.run(args.seed)
    failures = 0
    for label, err in results.items():
        ok = err < gradcheck.TOLERANCE
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'}  {label:<24} max rel err {err:.3e}")
    print(f"{len(results) - failures}/{len(results)} ops within {gradcheck.TOLERANCE:g}")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "colorize": _cmd_colorize,
        "train": _cmd_train,
        "eval": _cmd_eval,
        "gradcheck": _cmd_gradcheck,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
