"""Loss terms: zero identities, hand values, selection rules, gradients."""

import math

import numpy as np
import pytest

from bistream import losses
from bistream import tensor as T
from bistream.features import FeatureExtractor
from bistream.losses import (LossError, LossWeights, content_loss, edge_loss,
                             hem_loss, perceptual_loss, sobel_magnitude_t,
                             temporal_loss, total_loss)


def _lab(rng, h=8, w=8):
    lab = np.empty((h, w, 3))
    lab[..., 0] = rng.uniform(5, 95, size=(h, w))
    lab[..., 1:] = rng.uniform(-60, 60, size=(h, w, 2))
    return lab


def test_weights_validation():
    with pytest.raises(LossError, match="hem_fraction"):
        LossWeights(hem_fraction=0.0)
    with pytest.raises(LossError, match="hem_fraction"):
        LossWeights(hem_fraction=1.5)


def test_sobel_magnitude_matches_prior_module():
    # the loss-side Sobel uses zero padding (conv 'same'), so compare on the
    # interior where padding cannot reach
    from scipy import ndimage
    from bistream.priors import SOBEL_X, SOBEL_Y
    rng = np.random.default_rng(0)
    l = rng.uniform(0, 100, size=(12, 13))
    got = sobel_magnitude_t(T.constant(l)).data
    gx = ndimage.correlate(l, SOBEL_X, mode="constant")
    gy = ndimage.correlate(l, SOBEL_Y, mode="constant")
    expect = np.hypot(gx, gy)
    assert np.abs(got - expect).max() < 1e-9


def test_edge_loss_zero_on_matching_l():
    rng = np.random.default_rng(1)
    lab = _lab(rng)
    z = T.constant(lab)
    assert edge_loss(lab[..., 0], z).item() == 0.0


def test_edge_loss_ignores_chroma():
    rng = np.random.default_rng(2)
    lab = _lab(rng)
    other = lab.copy()
    other[..., 1:] = rng.uniform(-60, 60, size=lab[..., 1:].shape)
    assert edge_loss(lab[..., 0], T.constant(other)).item() == 0.0


def test_edge_loss_hand_value():
    # flat input vs a one-pixel bump: RMSE of the bump's Sobel response
    h = w = 8
    x_l = np.zeros((h, w))
    z = np.zeros((h, w, 3))
    z[4, 4, 0] = 1.0
    got = edge_loss(x_l, T.constant(z)).item()
    from scipy import ndimage
    from bistream.priors import SOBEL_X, SOBEL_Y
    gx = ndimage.correlate(z[..., 0], SOBEL_X, mode="constant")
    gy = ndimage.correlate(z[..., 0], SOBEL_Y, mode="constant")
    want = float(np.sqrt(np.mean(np.hypot(gx, gy) ** 2)))
    assert abs(got - want) < 1e-12


def test_hem_full_fraction_equals_pixel_mean():
    rng = np.random.default_rng(3)
    z = T.constant(rng.uniform(-50, 50, size=(6, 7, 2)))
    y = rng.uniform(-50, 50, size=(6, 7, 2))
    got = hem_loss(z, y, fraction=1.0).item()
    want = float(np.abs(z.data - y).sum(axis=2).mean())
    assert abs(got - want) < 1e-7


def test_hem_hand_selection():
    # 2x2 residuals 10, 6, 2, 0 -> top half keeps 10 and 6
    z = np.zeros((2, 2, 2))
    y = np.zeros((2, 2, 2))
    y[0, 0] = [6, 4]    # residual 10
    y[0, 1] = [6, 0]    # residual 6
    y[1, 0] = [1, 1]    # residual 2
    got = hem_loss(T.constant(z), y, fraction=0.5).item()
    assert abs(got - 8.0) < 1e-12


def test_hem_fraction_monotone():
    rng = np.random.default_rng(4)
    z = T.constant(rng.uniform(-50, 50, size=(8, 8, 2)))
    y = rng.uniform(-50, 50, size=(8, 8, 2))
    vals = [hem_loss(z, y, fraction=f).item()
            for f in (0.125, 0.25, 0.5, 0.75, 1.0)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_hem_gradient_only_on_selected():
    z = T.tensor(np.zeros((2, 2, 2)), requires_grad=True)
    y = np.zeros((2, 2, 2))
    y[0, 0] = [6, 4]
    y[0, 1] = [6, 0]
    y[1, 0] = [1, 1]
    grads = T.backward(hem_loss(z, y, fraction=0.5))
    g = grads[z.node_id].data
    assert np.abs(g[0, 0]).max() > 0 and np.abs(g[0, 1]).max() > 0
    assert np.abs(g[1, 0]).max() == 0 and np.abs(g[1, 1]).max() == 0


def test_hem_ceil_count():
    # fraction 0.5 of 9 pixels selects ceil(4.5) = 5
    z = T.constant(np.zeros((3, 3, 2)))
    y = np.ones((3, 3, 2))   # every residual 2
    got = hem_loss(z, y, fraction=0.5).item()
    assert abs(got - 2.0) < 1e-12   # mean over any 5 equal residuals


def test_content_loss_zero_and_hand_value():
    rng = np.random.default_rng(5)
    ab = rng.uniform(-50, 50, size=(5, 5, 2))
    assert content_loss(T.constant(ab), ab.copy()).item() == 0.0
    shifted = ab + 3.0
    got = content_loss(T.constant(shifted), ab).item()
    assert abs(got - 3.0) < 1e-12


def test_perceptual_zero_on_identical():
    rng = np.random.default_rng(6)
    lab = _lab(rng)
    ex = FeatureExtractor(seed=0, in_channels=3)
    assert perceptual_loss(T.constant(lab), lab.copy(), ex).item() == 0.0


def test_perceptual_positive_on_color_change():
    rng = np.random.default_rng(7)
    lab = _lab(rng)
    other = lab.copy()
    other[..., 1:] *= -1.0
    ex = FeatureExtractor(seed=0, in_channels=3)
    assert perceptual_loss(T.constant(other), lab, ex).item() > 0.0


def test_temporal_no_flow_is_plain_l1():
    rng = np.random.default_rng(8)
    a = rng.uniform(-50, 50, size=(6, 6, 2))
    b = rng.uniform(-50, 50, size=(6, 6, 2))
    got = temporal_loss(T.constant(a), b).item()
    assert abs(got - np.abs(a - b).mean()) < 1e-12


def test_temporal_zero_flow_matches_no_flow():
    rng = np.random.default_rng(9)
    a = rng.uniform(-50, 50, size=(6, 6, 2))
    b = rng.uniform(-50, 50, size=(6, 6, 2))
    flow = np.zeros((6, 6, 2))
    with_flow = temporal_loss(T.constant(a), b, flow).item()
    without = temporal_loss(T.constant(a), b).item()
    assert abs(with_flow - without) < 1e-12


def test_temporal_integer_shift_flow():
    # previous frame shifted right by one; flow undoes it exactly on the
    # valid region
    rng = np.random.default_rng(10)
    cur = rng.uniform(-50, 50, size=(5, 8, 2))
    prev = np.roll(cur, 1, axis=1)
    flow = np.zeros((5, 8, 2))
    flow[..., 0] = 1.0   # sample prev at x+1... sign check below
    a = temporal_loss(T.constant(cur), prev, flow).item()
    flow[..., 0] = -1.0
    b = temporal_loss(T.constant(cur), prev, flow).item()
    assert min(a, b) < 1e-12 and max(a, b) > 1.0


def test_temporal_all_invalid_flow_contributes_zero():
    rng = np.random.default_rng(11)
    cur = rng.uniform(-50, 50, size=(4, 4, 2))
    prev = rng.uniform(-50, 50, size=(4, 4, 2))
    flow = np.full((4, 4, 2), 100.0)   # every sample lands out of frame
    assert temporal_loss(T.constant(cur), prev, flow).item() == 0.0


def test_total_zero_on_identical():
    rng = np.random.default_rng(12)
    lab = _lab(rng)
    total, parts = total_loss(lab[..., 0], T.constant(lab), lab.copy(),
                              LossWeights())
    assert total.item() == 0.0
    assert parts["edge"] == 0.0 and parts["hem"] == 0.0
    assert parts["content"] == 0.0 and parts["total"] == 0.0


def test_total_matches_hand_weighted_sum():
    rng = np.random.default_rng(13)
    lab_y = _lab(rng)
    lab_z = _lab(rng)
    lab_z[..., 0] = lab_y[..., 0] + rng.uniform(-5, 5, size=lab_y.shape[:2])
    w = LossWeights(lambda_edge=2.0, lambda_hem=2.0, lambda_c=1.0)
    z = T.constant(lab_z)
    total, parts = total_loss(lab_y[..., 0], z, lab_y, w)
    e = edge_loss(lab_y[..., 0], z).item()
    hm = hem_loss(T.constant(lab_z[..., 1:]), lab_y[..., 1:],
                  w.hem_fraction).item()
    c = content_loss(T.constant(lab_z[..., 1:]), lab_y[..., 1:]).item()
    want = 2.0 * e + 2.0 * hm + 1.0 * c
    assert abs(total.item() - want) < 1e-9
    assert abs(parts["edge"] - e) < 1e-12
    assert abs(parts["hem"] - hm) < 1e-12
    assert abs(parts["content"] - c) < 1e-12
    assert parts["perceptual"] == 0.0 and parts["temporal"] == 0.0


def test_total_with_all_terms_active():
    rng = np.random.default_rng(14)
    lab_y = _lab(rng)
    lab_z = _lab(rng)
    prev = rng.uniform(-60, 60, size=(8, 8, 2))
    ex = FeatureExtractor(seed=0, in_channels=3)
    w = LossWeights()
    z = T.constant(lab_z)
    total, parts = total_loss(lab_y[..., 0], z, lab_y, w,
                              percep_extractor=ex, z_prev_ab=prev)
    combined = parts["content"] + 0.1 * parts["perceptual"] \
        + 1.0 * parts["temporal"]
    assert abs(parts["content_combined"] - combined) < 1e-6
    want = 2.0 * parts["edge"] + 2.0 * parts["hem"] + combined
    assert abs(parts["total"] - want) < 1e-5
    assert total.item() == parts["total"]
    assert parts["perceptual"] > 0 and parts["temporal"] > 0


def test_total_gradient_flows_to_output():
    rng = np.random.default_rng(15)
    lab_y = _lab(rng, 6, 6)
    z = T.tensor(_lab(rng, 6, 6), requires_grad=True)
    total, _ = total_loss(lab_y[..., 0], z, lab_y, LossWeights())
    grads = T.backward(total)
    g = grads[z.node_id].data
    assert g.shape == (6, 6, 3)
    assert np.abs(g).max() > 0


def test_total_finite_difference():
    rng = np.random.default_rng(16)
    lab_y = _lab(rng, 5, 5)
    z0 = T.tensor(_lab(rng, 5, 5), requires_grad=True)
    prev = rng.uniform(-60, 60, size=(5, 5, 2))
    ex = FeatureExtractor(seed=0, in_channels=3)

    def f(z):
        total, _ = total_loss(lab_y[..., 0], z, lab_y, LossWeights(),
                              percep_extractor=ex, z_prev_ab=prev)
        return total

    err = T.finite_difference_check(f, z0, eps=1e-6, max_coords=20, seed=0)
    assert err < 1e-4


def test_shape_errors():
    rng = np.random.default_rng(17)
    lab = _lab(rng)
    with pytest.raises(LossError, match="mismatch"):
        content_loss(T.constant(lab[..., 1:]), lab[:4, :, 1:])
    with pytest.raises(LossError, match="matching"):
        hem_loss(T.constant(lab[..., 1:]), lab[:4, :, 1:])
    with pytest.raises(LossError, match="fraction"):
        hem_loss(T.constant(lab[..., 1:]), lab[..., 1:], fraction=0.0)
    with pytest.raises(LossError, match="edge loss"):
        edge_loss(lab[..., 0][:4], T.constant(lab))
    with pytest.raises(LossError, match="matching"):
        temporal_loss(T.constant(lab[..., 1:]), lab[:4, :, 1:])
    with pytest.raises(LossError, match="shape mismatch"):
        total_loss(lab[..., 0], T.constant(lab), lab[:4], LossWeights())
