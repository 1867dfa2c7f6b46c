"""Reconstruction losses over valid output frames."""

from __future__ import annotations

import torch

from ..errors import ConfigError, ShapeError


def _check(out: torch.Tensor, gt: torch.Tensor) -> None:
    if out.shape != gt.shape:
        raise ShapeError(f"loss shape mismatch: {list(out.shape)} vs {list(gt.shape)}")


def mse_loss(out: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    _check(out, gt)
    return torch.mean((out - gt) ** 2)


def charbonnier_loss(out: torch.Tensor, gt: torch.Tensor, eps: float = 1e-3) -> torch.Tensor:
    """Elementwise mean of sqrt(diff^2 + eps^2)."""
    _check(out, gt)
    if eps <= 0:
        raise ConfigError("charbonnier eps must be > 0", key="charbonnier_eps")
    return torch.mean(torch.sqrt((out - gt) ** 2 + eps * eps))


def make_loss(cfg):
    if cfg.loss == "mse":
        return mse_loss
    return lambda out, gt: charbonnier_loss(out, gt, cfg.charbonnier_eps)
