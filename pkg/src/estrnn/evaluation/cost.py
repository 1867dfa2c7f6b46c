"""Analytic multiply-accumulate cost model.

Counting convention: one multiply-accumulate is one MAC; bias adds,
activations, pooling and concatenation are free. Transposed convolutions are
counted like convolutions at their output resolution. Per-frame cost is the
amortized steady state: one pass of the recurrent cell, one fusion (neighbor
features are reused from the frames that produced them) and one
reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from ..config import ModelConfig
from ..errors import ShapeError


def macs_conv_layer(kind: str, c_in: int, c_out: int, k: int = 1, stride: int = 1,
                    h_out: int = 1, w_out: int = 1) -> int:
    """MACs for one layer. ``stride`` only matters through ``h_out``/``w_out``."""
    if kind == "linear":
        return c_in * c_out
    if kind not in ("conv", "conv1x1", "transposed"):
        raise ValueError(f"unknown layer kind {kind!r}")
    if kind == "conv1x1":
        k = 1
    return k * k * c_in * c_out * h_out * w_out


@dataclass
class LayerCost:
    name: str
    kind: str
    macs: int
    params: int


@dataclass
class CostReport:
    config_name: str
    resolution: tuple[int, int]
    layers: list[LayerCost] = field(default_factory=list)
    ms_per_frame: float | None = None

    @property
    def total_macs(self) -> int:
        return sum(layer.macs for layer in self.layers)

    @property
    def total_params(self) -> int:
        return sum(layer.params for layer in self.layers)

    @property
    def gmacs(self) -> float:
        return self.total_macs / 1e9

    @property
    def mparams(self) -> float:
        return self.total_params / 1e6

    @property
    def fps(self) -> float | None:
        return None if self.ms_per_frame is None else 1000.0 / self.ms_per_frame

    def by_prefix(self, prefix: str) -> int:
        return sum(layer.macs for layer in self.layers if layer.name.startswith(prefix))

    def to_csv(self) -> str:
        lines = ["layer,kind,macs,params"]
        lines += [f"{l.name},{l.kind},{l.macs},{l.params}" for l in self.layers]
        lines.append(f"total,,{self.total_macs},{self.total_params}")
        return "\n".join(lines) + "\n"


def _layer_cost(name: str, module: nn.Module, out: torch.Tensor) -> LayerCost:
    params = sum(p.numel() for p in module.parameters(recurse=False))
    if isinstance(module, nn.Linear):
        return LayerCost(name, "linear", macs_conv_layer(
            "linear", module.in_features, module.out_features), params)
    k = module.kernel_size[0]
    kind = "transposed" if isinstance(module, nn.ConvTranspose2d) else (
        "conv1x1" if k == 1 else "conv")
    macs = macs_conv_layer(kind, module.in_channels // module.groups, module.out_channels, k,
                           module.stride[0], out.shape[-2], out.shape[-1])
    return LayerCost(name, kind, macs, params)


def _passthrough(x):
    return x


def macs_model(config: ModelConfig, resolution: tuple[int, int] = (1280, 720)) -> CostReport:
    """Per-frame cost of ``config`` on ``(width, height)`` frames.

    Walks the real module graph with shape-only (meta device) tensors, so the
    count always matches the implemented architecture.
    """
    from ..model.network import ESTRNN

    w, h = resolution
    if h % 4 or w % 4:
        raise ShapeError(f"resolution {w}x{h} is not divisible by 4")
    report = CostReport(config.name, (w, h))
    with torch.device("meta"):
        model = ESTRNN(config, seed=None)
    names = {m: n for n, m in model.named_modules()}
    hooks = []

    def record(module, _inputs, output):
        report.layers.append(_layer_cost(names[module], module, output))

    for module in names:
        if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            hooks.append(module.register_forward_hook(record))
        elif isinstance(module, (nn.ReLU, nn.Sigmoid)):
            # free and shape-preserving; their meta kernels are slow python refs
            module.forward = _passthrough
    with torch.no_grad():
        frame = torch.empty(1, 3, h, w, device="meta")
        f_t, _ = model.cell(frame, model.init_hidden(frame))
        n_nb = config.context_past + config.context_future
        model.decode(f_t, [torch.empty_like(f_t) for _ in range(n_nb)])
    for hook in hooks:
        hook.remove()
    return report


def count_params(config: ModelConfig) -> int:
    from ..model.network import ESTRNN

    with torch.device("meta"):
        model = ESTRNN(config, seed=None)
    return sum(p.numel() for p in model.parameters())
