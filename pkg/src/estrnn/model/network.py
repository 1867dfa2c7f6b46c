"""Full recurrent deblurring network."""

from __future__ import annotations

import math

import torch
import torch.nn as nn

from ..config import ModelConfig
from ..errors import SequenceTooShortError, ShapeError
from .blocks import RDB, RDBCell, ResBlock
from .fusion import make_fusion


class Reconstructor(nn.Module):
    """x4 upsampling: two stride-2 transposed convs then a 3x3 projection to RGB.

    The upsampler is linear. With C=16 the second stage has only 4 channels
    and ReLUs there die early in training, freezing the output.
    """

    def __init__(self, channels: int, out_channels: int = 3):
        super().__init__()
        c2, c4 = max(1, channels // 2), max(1, channels // 4)
        self.channels = channels
        self.up1 = nn.ConvTranspose2d(channels, c2, 4, stride=2, padding=1)
        self.up2 = nn.ConvTranspose2d(c2, c4, 4, stride=2, padding=1)
        self.out = nn.Conv2d(c4, out_channels, 3, padding=1)

    def forward(self, x):
        if x.dim() != 4 or x.shape[1] != self.channels:
            raise ShapeError(f"reconstruct expects [N, {self.channels}, h, w], got {list(x.shape)}")
        return self.out(self.up2(self.up1(x)))


RESIDUAL_SCALE = 0.1


def init_params(module: nn.Module, seed: int = 0) -> nn.Module:
    """Fan-in scaled uniform weights, zero biases, from a private generator.

    The last layer of every residual branch is further scaled by
    ``RESIDUAL_SCALE``; unscaled, features grow geometrically along the
    recurrence (about 3x per frame for B9C80).
    """
    gen = torch.Generator().manual_seed(seed)
    for name, p in module.named_parameters():
        with torch.no_grad():
            if name.endswith("bias"):
                p.zero_()
                continue
            fan_in = nn.init._calculate_fan_in_and_fan_out(p)[0]
            bound = math.sqrt(3.0 / fan_in)
            noise = torch.rand(p.shape, generator=gen, dtype=torch.float64)
            p.copy_((noise * 2 - 1) * bound)
    for m in module.modules():
        last = m.lff if isinstance(m, RDB) else m.conv2 if isinstance(m, ResBlock) else None
        if last is not None:
            with torch.no_grad():
                last.weight.mul_(RESIDUAL_SCALE)
    return module


class ESTRNN(nn.Module):
    """RDB-cell recurrence over the sequence, GSA fusion with P past and F
    future hierarchical features, and per-frame reconstruction.

    ``forward`` takes ``[N, T, 3, H, W]`` and returns ``(outputs, (t_lo, t_hi))``
    where ``outputs`` holds frames ``t_lo..t_hi`` inclusive.
    """

    def __init__(self, cfg: ModelConfig | None = None, seed: int | None = 0):
        super().__init__()
        self.cfg = cfg = cfg or ModelConfig()
        self.cell = RDBCell(cfg)
        self.fusion = make_fusion(cfg)
        self.recon = Reconstructor(cfg.n_channels)
        if seed is not None:
            init_params(self, seed)
            if cfg.global_skip:
                # start as the identity map on the input frame
                nn.init.zeros_(self.recon.out.weight)

    def valid_range(self, n_frames: int, frame_mode: str | None = None) -> tuple[int, int]:
        mode = frame_mode or self.cfg.frame_mode
        if mode == "edge":
            return 0, n_frames - 1
        p, f = self.cfg.context_past, self.cfg.context_future
        if n_frames < p + f + 1:
            raise SequenceTooShortError(n_frames, p + f + 1)
        return p, n_frames - 1 - f

    def init_hidden(self, frame: torch.Tensor) -> torch.Tensor:
        n, _, h, w = frame.shape
        return frame.new_zeros(n, self.cfg.hidden_channels, h // 4, w // 4)

    def encode(self, video: torch.Tensor) -> list[torch.Tensor]:
        """Run the recurrent cell over every frame; returns ``[f_0 .. f_{T-1}]``."""
        hidden = self.init_hidden(video[:, 0])
        feats = []
        for t in range(video.shape[1]):
            f_t, hidden = self.cell(video[:, t] - self.cfg.input_offset, hidden)
            feats.append(f_t)
        return feats

    def neighbors(self, feats: list[torch.Tensor], t: int) -> list[torch.Tensor]:
        if not self.cfg.use_fusion:
            return []
        last = len(feats) - 1
        idx = [t - k for k in range(self.cfg.n_past, 0, -1)]
        idx += [t + k for k in range(1, self.cfg.n_future + 1)]
        return [feats[min(max(i, 0), last)] for i in idx]

    def decode(self, f_t, neighbors, frame=None):
        out = self.recon(self.fusion(f_t, neighbors))
        if self.cfg.global_skip and frame is not None:
            out = out + frame
        return out

    def forward(self, video: torch.Tensor, frame_mode: str | None = None):
        if video.dim() != 5:
            raise ShapeError(f"expected [N, T, C, H, W] video, got {list(video.shape)}")
        h, w = video.shape[-2:]
        if h % 4 or w % 4:
            raise ShapeError(f"frame size {h}x{w} is not divisible by 4")
        t_lo, t_hi = self.valid_range(video.shape[1], frame_mode)
        feats = self.encode(video)
        outs = [self.decode(feats[t], self.neighbors(feats, t), video[:, t])
                for t in range(t_lo, t_hi + 1)]
        return torch.stack(outs, dim=1), (t_lo, t_hi)


def forward_sequence(video: torch.Tensor, model: ESTRNN, frame_mode: str | None = None):
    """Deblur one ``[T, 3, H, W]`` clip; returns ``(outputs, (t_lo, t_hi))``."""
    if video.dim() != 4:
        raise ShapeError(f"expected [T, C, H, W] video, got {list(video.shape)}")
    out, rng = model(video.unsqueeze(0), frame_mode)
    return out[0], rng
