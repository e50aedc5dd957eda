"""Finite-difference verification cases covering every primitive op.

Each case pins a small scalar-valued function of one input tensor and the
op kind it exercises; `run` measures the worst relative disagreement between
the analytic gradient and central differences. Inputs are drawn away from
the non-smooth points of kinked ops (abs at 0, clamp at its bounds, relu at
0 is measure-zero for continuous draws) so the comparison is meaningful.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T

TOLERANCE = 1e-4
EPS = 1e-6


def _rng(seed):
    return np.random.default_rng(seed)


def op_cases(seed: int = 0):
    """List of (label, op_kind, f, x0) finite-difference cases."""
    r = _rng(seed)
    cases = []

    def add_case(label, kind, f, x0):
        cases.append((label, kind, f, T.tensor(np.asarray(x0, dtype=np.float64))))

    c34 = r.normal(size=(3, 4))
    add_case("add", "add", lambda x: T.tmean(T.add(x, T.constant(c34))),
             r.normal(size=(3, 4)))
    add_case("sub", "sub", lambda x: T.tmean(T.sub(x, T.constant(c34))),
             r.normal(size=(3, 4)))
    add_case("mul", "mul", lambda x: T.tmean(T.mul(x, T.constant(c34))),
             r.normal(size=(3, 4)))
    add_case("scalar_mul", "scalar_mul",
             lambda x: T.tmean(T.scalar_mul(x, -1.7)), r.normal(size=(3, 4)))
    add_case("relu", "relu", lambda x: T.tmean(T.relu(x)),
             r.normal(size=(4, 4)) + 0.05)

    w45 = r.normal(size=(4, 5))
    add_case("softmax_rows", "softmax_rows",
             lambda x: T.tmean(T.mul(T.softmax_rows(x), T.constant(w45))),
             r.normal(size=(4, 5)))

    b43 = r.normal(size=(4, 3))
    add_case("matmul", "matmul",
             lambda x: T.tmean(T.matmul(x, T.constant(b43))),
             r.normal(size=(3, 4)))

    conv_w = r.normal(size=(3, 3, 2, 3)) * 0.5
    conv_b = r.normal(size=(3,))
    conv_x = r.normal(size=(6, 5, 2))
    add_case("conv2d input", "conv2d",
             lambda x: T.tmean(T.conv2d(x, T.constant(conv_w), T.constant(conv_b),
                                        stride=2, pad="same")),
             conv_x)
    add_case("conv2d weight", "conv2d",
             lambda w: T.tmean(T.conv2d(T.constant(conv_x), w, T.constant(conv_b),
                                        stride=1, pad="same")),
             conv_w)
    add_case("conv2d bias", "conv2d",
             lambda b: T.tmean(T.conv2d(T.constant(conv_x), T.constant(conv_w), b,
                                        stride=1, pad=0)),
             conv_b)

    up_w = r.normal(size=(8, 11, 2))
    add_case("bilinear_resample up", "bilinear_resample",
             lambda x: T.tmean(T.mul(T.bilinear_resample(x, (8, 11)),
                                     T.constant(up_w))),
             r.normal(size=(5, 7, 2)))
    down_w = r.normal(size=(3, 4))
    add_case("bilinear_resample down", "bilinear_resample",
             lambda x: T.tmean(T.mul(T.bilinear_resample(x, (3, 4)),
                                     T.constant(down_w))),
             r.normal(size=(8, 6)))

    flow = r.uniform(-1.5, 1.5, size=(5, 6, 2))
    warp_w = r.normal(size=(5, 6, 2))
    add_case("bilinear_warp", "bilinear_warp",
             lambda x: T.tmean(T.mul(T.bilinear_warp(x, flow), T.constant(warp_w))),
             r.normal(size=(5, 6, 2)))

    cat_c = r.normal(size=(3, 2))
    cat_w = r.normal(size=(3, 6))
    add_case("concat", "concat",
             lambda x: T.tmean(T.mul(T.concat([x, T.constant(cat_c)], axis=1),
                                     T.constant(cat_w))),
             r.normal(size=(3, 4)))

    add_case("sum all", "sum", lambda x: T.scalar_mul(T.tsum(x), 0.3),
             r.normal(size=(3, 4)))
    add_case("sum axis", "sum", lambda x: T.tmean(T.tsum(x, axis=1)),
             r.normal(size=(3, 4)))
    add_case("mean all", "mean", lambda x: T.tmean(x), r.normal(size=(3, 4)))
    add_case("mean axis", "mean", lambda x: T.tmean(T.tmean(x, axis=0)),
             r.normal(size=(3, 4)))

    add_case("abs", "abs", lambda x: T.tmean(T.tabs(x)),
             np.where(r.normal(size=(4, 4)) >= 0, 1.0, -1.0)
             * r.uniform(0.2, 1.0, size=(4, 4)))
    add_case("square", "square", lambda x: T.tmean(T.square(x)),
             r.normal(size=(4, 4)))
    add_case("sqrt", "sqrt", lambda x: T.tmean(T.tsqrt(x)),
             r.uniform(0.5, 2.0, size=(4, 4)))

    inside = r.uniform(-0.4, 0.4, size=(4, 4))
    outside = np.where(r.normal(size=(4, 4)) >= 0, 1.0, -1.0) \
        * r.uniform(0.6, 1.0, size=(4, 4))
    clamp_x = np.where(r.uniform(size=(4, 4)) < 0.5, inside, outside)
    add_case("clamp", "clamp", lambda x: T.tmean(T.clamp(x, -0.5, 0.5)), clamp_x)

    add_case("powc", "powc", lambda x: T.tmean(T.powc(x, 2.4)),
             r.uniform(0.5, 1.5, size=(4, 4)))

    rs_w = r.normal(size=(12,))
    add_case("reshape", "reshape",
             lambda x: T.tmean(T.mul(T.reshape(x, (12,)), T.constant(rs_w))),
             r.normal(size=(3, 4)))
    tr_w = r.normal(size=(4, 3))
    add_case("transpose", "transpose",
             lambda x: T.tmean(T.mul(T.transpose(x, (1, 0)), T.constant(tr_w))),
             r.normal(size=(3, 4)))
    sl_w = r.normal(size=(3, 2))
    add_case("slice", "slice",
             lambda x: T.tmean(T.mul(T.slice_axis(x, 1, 1, 3), T.constant(sl_w))),
             r.normal(size=(3, 4)))

    return cases


def covered_kinds(cases) -> set:
    return {kind for _, kind, _, _ in cases}


def run(seed: int = 0) -> dict[str, float]:
    """Label -> worst relative gradient error, every primitive op covered."""
    results = {}
    for label, _, f, x0 in op_cases(seed):
        results[label] = T.finite_difference_check(f, x0, eps=EPS)
    return results
