"""Convolutional building blocks of the recurrent cell."""

from __future__ import annotations

import torch
import torch.nn as nn

from ..errors import ShapeError


def conv(in_ch: int, out_ch: int, kernel_size: int, stride: int = 1) -> nn.Conv2d:
    return nn.Conv2d(in_ch, out_ch, kernel_size, stride=stride, padding=kernel_size // 2)


def _check_channels(x: torch.Tensor, expected: int, what: str) -> None:
    if x.dim() != 4 or x.shape[1] != expected:
        raise ShapeError(f"{what} expects [N, {expected}, H, W], got {list(x.shape)}")


class RDB(nn.Module):
    """Residual dense block.

    ``n_layers`` densely connected 3x3 conv+ReLU layers of width ``growth``,
    a 1x1 local fusion back to ``channels`` and a residual add.
    """

    def __init__(self, channels: int, growth: int, n_layers: int):
        super().__init__()
        self.channels = channels
        self.dense = nn.ModuleList(
            conv(channels + i * growth, growth, 3) for i in range(n_layers)
        )
        self.lff = nn.Conv2d(channels + n_layers * growth, channels, 1)
        self.relu = nn.ReLU()

    @property
    def concat_width(self) -> int:
        return self.lff.in_channels

    def forward(self, x):
        _check_channels(x, self.channels, "RDB")
        feats = x
        for layer in self.dense:
            feats = torch.cat([feats, self.relu(layer(feats))], dim=1)
        return x + self.lff(feats)


class ResBlock(nn.Module):
    """Plain two-conv residual block; stands in for RDB in the no-RDB ablation."""

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.conv1 = conv(channels, channels, 3)
        self.conv2 = conv(channels, channels, 3)
        self.relu = nn.ReLU()

    def forward(self, x):
        _check_channels(x, self.channels, "ResBlock")
        return x + self.conv2(self.relu(self.conv1(x)))


def make_block(cfg, channels: int) -> nn.Module:
    if cfg.use_rdb_cell:
        return RDB(channels, cfg.growth_rate, cfg.n_dense_layers)
    return ResBlock(channels)


class DownsampleEmbed(nn.Module):
    """Two 5x5 stride-2 convs, each followed by a block, then concat with the
    previous hidden state and a 3x3 projection back to C channels."""

    def __init__(self, cfg, in_channels: int = 3):
        super().__init__()
        c = cfg.n_channels
        self.in_channels = in_channels
        self.hidden_channels = cfg.hidden_channels
        self.conv1 = conv(in_channels, c, 5, stride=2)
        self.block1 = make_block(cfg, c)
        self.conv2 = conv(c, c, 5, stride=2)
        self.block2 = make_block(cfg, c)
        self.proj = conv(c + cfg.hidden_channels, c, 3)
        self.relu = nn.ReLU()

    def forward(self, frame, hidden):
        _check_channels(frame, self.in_channels, "downsample_embed frame")
        h, w = frame.shape[-2:]
        if h % 4 or w % 4:
            raise ShapeError(f"frame size {h}x{w} is not divisible by 4")
        x = self.block1(self.relu(self.conv1(frame)))
        x = self.block2(self.relu(self.conv2(x)))
        if hidden.dim() != 4 or hidden.shape[0] != x.shape[0] \
                or hidden.shape[1] != self.hidden_channels or hidden.shape[2:] != x.shape[2:]:
            raise ShapeError(
                f"hidden state {list(hidden.shape)} does not match downsampled frame "
                f"features {list(x.shape)} (expected {self.hidden_channels} hidden channels)")
        return self.proj(torch.cat([x, hidden], dim=1))


class RDBStack(nn.Module):
    """B blocks in sequence; their outputs are concatenated and fused by a 1x1 conv."""

    def __init__(self, cfg):
        super().__init__()
        c = cfg.n_channels
        self.blocks = nn.ModuleList(make_block(cfg, c) for _ in range(cfg.n_blocks))
        self.fusion = nn.Conv2d(cfg.n_blocks * c, c, 1)

    def forward(self, f_d):
        outs = []
        x = f_d
        for block in self.blocks:
            x = block(x)
            outs.append(x)
        return self.fusion(torch.cat(outs, dim=1)), outs


class HiddenUpdate(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.conv = conv(cfg.n_channels, cfg.hidden_channels, 3)
        self.block = make_block(cfg, cfg.hidden_channels)
        self.relu = nn.ReLU()

    def forward(self, f_t):
        return self.block(self.relu(self.conv(f_t)))


class RDBCell(nn.Module):
    """Recurrent cell: (frame, h_{t-1}) -> (f_t, h_t)."""

    def __init__(self, cfg):
        super().__init__()
        self.downsample = DownsampleEmbed(cfg)
        self.stack = RDBStack(cfg)
        self.hidden = HiddenUpdate(cfg)

    def forward(self, frame, hidden):
        f_d = self.downsample(frame, hidden)
        f_t, _ = self.stack(f_d)
        return f_t, self.hidden(f_t)
