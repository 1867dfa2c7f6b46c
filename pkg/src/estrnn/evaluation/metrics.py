"""Image quality metrics on [0, 1] images, ``[C, H, W]`` or ``[T, C, H, W]``."""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import ShapeError

PSNR_CAP = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, np.ndarray):
        x = torch.from_numpy(x)
    return x.detach().to(torch.float64)


def psnr(a, b, data_range: float = 1.0) -> float:
    """10 log10(range^2 / MSE) in dB, capped at 100 dB for identical inputs."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"psnr shape mismatch: {list(a.shape)} vs {list(b.shape)}")
    mse = torch.mean((a - b) ** 2).item()
    if mse == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(data_range ** 2 / mse))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> torch.Tensor:
    coords = torch.arange(size, dtype=torch.float64) - (size - 1) / 2
    g = torch.exp(-coords ** 2 / (2 * sigma ** 2))
    return g / g.sum()


def _ssim_frame(a: torch.Tensor, b: torch.Tensor, data_range: float) -> float:
    c = a.shape[0]
    g = gaussian_window()
    kx = g.view(1, 1, 1, -1).repeat(c, 1, 1, 1)
    ky = g.view(1, 1, -1, 1).repeat(c, 1, 1, 1)

    def blur(x):
        return F.conv2d(F.conv2d(x, kx, groups=c), ky, groups=c)

    x, y = a.unsqueeze(0), b.unsqueeze(0)
    mu_x, mu_y = blur(x), blur(y)
    sxx = blur(x * x) - mu_x ** 2
    syy = blur(y * y) - mu_y ** 2
    sxy = blur(x * y) - mu_x * mu_y
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * sxy + c2)) / \
        ((mu_x ** 2 + mu_y ** 2 + c1) * (sxx + syy + c2))
    return ssim_map.mean().item()


def ssim(a, b, data_range: float = 1.0) -> float:
    """Gaussian-windowed SSIM (11x11, sigma 1.5) over valid window positions.

    Averages over positions and channels; video input is the per-frame mean.
    """
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"ssim shape mismatch: {list(a.shape)} vs {list(b.shape)}")
    if a.dim() not in (3, 4):
        raise ShapeError(f"ssim expects [C, H, W] or [T, C, H, W], got {list(a.shape)}")
    if min(a.shape[-2:]) < SSIM_WINDOW:
        raise ShapeError(f"frame {list(a.shape[-2:])} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    if a.dim() == 3:
        return _ssim_frame(a, b, data_range)
    return float(np.mean([_ssim_frame(x, y, data_range) for x, y in zip(a, b)]))


def psnr_video(a, b) -> float:
    """Mean of per-frame PSNR over ``[T, C, H, W]`` clips."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"psnr shape mismatch: {list(a.shape)} vs {list(b.shape)}")
    return float(np.mean([psnr(x, y) for x, y in zip(a, b)]))
