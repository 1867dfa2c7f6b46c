"""Temporal fusion of hierarchical features from neighboring frames."""

from __future__ import annotations

import torch
import torch.nn as nn

from ..errors import ArityError, ShapeError


class GAPFusion(nn.Module):
    """Gated fusion of the current frame's features with one neighbor's.

    The concatenated pair is pooled globally and mapped through
    linear-ReLU-linear-sigmoid to per-channel weights, which rescale the
    output of a 1x1 conv stack applied to the same concatenation.
    """

    def __init__(self, channels: int, reduction: int = 4):
        super().__init__()
        c2 = 2 * channels
        self.channels = channels
        self.gate_reduce = nn.Linear(c2, max(1, c2 // reduction))
        self.gate_expand = nn.Linear(max(1, c2 // reduction), channels)
        self.proj1 = nn.Conv2d(c2, channels, 1)
        self.proj2 = nn.Conv2d(channels, channels, 1)
        self.relu = nn.ReLU()

    def gate(self, f_c):
        pooled = f_c.mean(dim=(2, 3))
        return torch.sigmoid(self.gate_expand(self.relu(self.gate_reduce(pooled))))

    def forward(self, f_t, f_neighbor):
        if f_t.shape != f_neighbor.shape or f_t.shape[1] != self.channels:
            raise ShapeError(
                f"gap_fusion inputs must both be [N, {self.channels}, H, W]; "
                f"got {list(f_t.shape)} and {list(f_neighbor.shape)}")
        f_c = torch.cat([f_t, f_neighbor], dim=1)
        weights = self.gate(f_c)
        return weights[:, :, None, None] * self.proj2(self.relu(self.proj1(f_c)))


def _check_neighbors(neighbors, expected: int) -> None:
    if len(neighbors) != expected:
        raise ArityError(f"expected {expected} neighbor feature maps (P+F), got {len(neighbors)}")


class GSAFusion(nn.Module):
    """One unshared GAPFusion branch per neighbor offset, then a 1x1 fusion of
    ``[branches..., f_t]``. Neighbors are ordered t-P..t-1, t+1..t+F."""

    def __init__(self, cfg):
        super().__init__()
        c = cfg.n_channels
        self.n_neighbors = cfg.n_past + cfg.n_future
        self.branches = nn.ModuleList(
            GAPFusion(c, cfg.gate_reduction) for _ in range(self.n_neighbors)
        )
        self.fusion = nn.Conv2d((self.n_neighbors + 1) * c, c, 1)

    def forward(self, f_t, neighbors):
        _check_neighbors(neighbors, self.n_neighbors)
        feats = [branch(f_t, nb) for branch, nb in zip(self.branches, neighbors)]
        return self.fusion(torch.cat([*feats, f_t], dim=1))


class ConcatFusion(nn.Module):
    """Ablation without attention: plain channel concat and 1x1 fusion."""

    def __init__(self, cfg):
        super().__init__()
        c = cfg.n_channels
        self.n_neighbors = cfg.n_past + cfg.n_future
        self.fusion = nn.Conv2d((self.n_neighbors + 1) * c, c, 1)

    def forward(self, f_t, neighbors):
        _check_neighbors(neighbors, self.n_neighbors)
        for nb in neighbors:
            if nb.shape != f_t.shape:
                raise ShapeError(f"neighbor {list(nb.shape)} does not match f_t {list(f_t.shape)}")
        return self.fusion(torch.cat([*neighbors, f_t], dim=1))


class NoFusion(nn.Module):
    """Ablation without temporal fusion: 1x1 conv of the current features only."""

    n_neighbors = 0

    def __init__(self, cfg):
        super().__init__()
        self.fusion = nn.Conv2d(cfg.n_channels, cfg.n_channels, 1)

    def forward(self, f_t, neighbors=()):
        _check_neighbors(neighbors, 0)
        return self.fusion(f_t)


def make_fusion(cfg) -> nn.Module:
    if not cfg.use_fusion:
        return NoFusion(cfg)
    if cfg.use_gsa:
        return GSAFusion(cfg)
    return ConcatFusion(cfg)
