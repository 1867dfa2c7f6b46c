import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from estrnn.errors import ShapeError
from estrnn.evaluation.metrics import psnr, psnr_video, ssim


def direct_ssim(a, b, size=11, sigma=1.5, k1=0.01, k2=0.03, data_range=1.0):
    """Brute-force SSIM: explicit loop over every valid window placement."""
    half = (size - 1) / 2
    g = np.array([math.exp(-((i - half) ** 2) / (2 * sigma * sigma)) for i in range(size)])
    w = np.outer(g, g)
    w /= w.sum()
    c1, c2 = (k1 * data_range) ** 2, (k2 * data_range) ** 2
    vals = []
    for ch in range(a.shape[0]):
        for y in range(a.shape[1] - size + 1):
            for x in range(a.shape[2] - size + 1):
                pa = a[ch, y:y + size, x:x + size]
                pb = b[ch, y:y + size, x:x + size]
                ma, mb = (w * pa).sum(), (w * pb).sum()
                va = (w * (pa - ma) ** 2).sum()
                vb = (w * (pb - mb) ** 2).sum()
                cov = (w * (pa - ma) * (pb - mb)).sum()
                vals.append(((2 * ma * mb + c1) * (2 * cov + c2))
                            / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def test_psnr_cap():
    a = np.random.default_rng(0).random((3, 8, 8))
    assert psnr(a, a) == 100.0


@pytest.mark.parametrize("diff,expected", [(0.1, 20.0), (0.5, 10 * math.log10(4))])
def test_psnr_closed_form(diff, expected):
    a = np.full((3, 8, 8), 0.2)
    assert psnr(a, a + diff) == pytest.approx(expected, abs=1e-9)
    assert round(psnr(a, a + diff), 2) == round(expected, 2)


@settings(max_examples=30, deadline=None)
@given(d1=st.floats(0.001, 0.5), d2=st.floats(0.001, 0.5))
def test_psnr_symmetric_and_decreasing(d1, d2):
    a = np.full((3, 4, 4), 0.25)
    assert psnr(a, a + d1) == psnr(a + d1, a)
    if d1 < d2:
        assert psnr(a, a + d1) > psnr(a, a + d2)


def test_psnr_shape_mismatch():
    with pytest.raises(ShapeError):
        psnr(np.zeros((3, 4, 4)), np.zeros((3, 4, 5)))


def test_psnr_video_is_frame_mean(rng):
    a, b = rng.random((4, 3, 8, 8)), rng.random((4, 3, 8, 8))
    assert psnr_video(a, b) == pytest.approx(np.mean([psnr(x, y) for x, y in zip(a, b)]))


def test_ssim_identity(rng):
    a = rng.random((3, 16, 16))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constant_closed_form():
    c1 = 1e-4
    assert ssim(np.zeros((3, 16, 16)), np.ones((3, 16, 16))) == pytest.approx(c1 / (1 + c1),
                                                                            rel=1e-9)


def test_ssim_matches_direct_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        h, w = rng.integers(11, 19, size=2)
        a = rng.random((3, h, w))
        b = np.clip(a + rng.normal(0, rng.uniform(0.02, 0.4), a.shape), 0, 1)
        assert abs(ssim(a, b) - direct_ssim(a, b)) < 1e-6


def test_ssim_symmetric(rng):
    a, b = rng.random((3, 14, 14)), rng.random((3, 14, 14))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_video_mean(rng):
    a, b = rng.random((3, 3, 12, 12)), rng.random((3, 3, 12, 12))
    assert ssim(a, b) == pytest.approx(np.mean([ssim(x, y) for x, y in zip(a, b)]))


def test_ssim_window_too_large():
    with pytest.raises(ShapeError, match="window"):
        ssim(np.zeros((3, 10, 30)), np.zeros((3, 10, 30)))


def test_metrics_accept_tensors():
    a = torch.rand(3, 12, 12)
    assert psnr(a, a.numpy()) == 100.0
