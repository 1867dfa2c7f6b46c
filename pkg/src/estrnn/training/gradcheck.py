"""Central finite-difference check of the autograd gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..config import ModelConfig
from ..errors import EstrnnError
from ..model.network import ESTRNN
from .losses import mse_loss
from .trainer import valid_loss

FAMILIES = {
    "dense_conv": lambda n: ".dense." in n,
    "local_fusion": lambda n: ".lff." in n,
    "gate_linear": lambda n: ".gate_" in n,
    "transposed_conv": lambda n: n.startswith("recon.up"),
}


def family_of(name: str) -> str:
    for fam, match in FAMILIES.items():
        if match(name):
            return fam
    return "other"


@dataclass
class GradRecord:
    name: str
    index: tuple[int, ...]
    family: str
    analytic: float
    numeric: float

    @property
    def rel_error(self) -> float:
        denom = max(abs(self.analytic), abs(self.numeric), GradCheckResult.floor)
        return abs(self.analytic - self.numeric) / denom


@dataclass
class GradCheckResult:
    records: list[GradRecord] = field(default_factory=list)
    # stencils discarded because a ReLU changed sign between theta-h and theta+h
    kinks: int = 0
    floor = 1e-7  # denominator floor for near-zero gradients

    @property
    def max_rel_error(self) -> float:
        return max(r.rel_error for r in self.records)

    @property
    def families(self) -> set[str]:
        return {r.family for r in self.records}

    def worst(self) -> GradRecord:
        return max(self.records, key=lambda r: r.rel_error)


def micro_config(**kwargs) -> ModelConfig:
    base = dict(n_blocks=2, n_channels=8, growth_rate=4, n_past=2, n_future=2)
    return ModelConfig(**{**base, **kwargs})


def gradient_check(model_cfg: ModelConfig | None = None, n_params_sampled: int = 40,
                   h: float = 1e-5, size: int = 16, seed: int = 0,
                   target: torch.Tensor | None = None,
                   max_redraws: int = 20) -> GradCheckResult:
    """Compare autograd against (f(x+h) - f(x-h)) / 2h on sampled weights.

    Runs in float64 on a ``[1, P+F+1, 3, size, size]`` random clip with an MSE
    loss against a random target. At least one weight from each entry of
    ``FAMILIES`` present in the model is sampled.

    A central difference is meaningless when the stencil straddles a ReLU
    kink, so any entry whose activation pattern differs between the two
    probes is redrawn from the same parameter tensor (counted in ``kinks``).
    """
    model_cfg = model_cfg or micro_config()
    gen = torch.Generator().manual_seed(seed)
    model = ESTRNN(model_cfg, seed=seed).double()
    # non-zero biases so every parameter path is exercised
    with torch.no_grad():
        for name, p in model.named_parameters():
            if name.endswith("bias"):
                p.copy_(0.1 * torch.randn(p.shape, generator=gen, dtype=torch.float64))
    t = max(model_cfg.min_frames, 1)
    blur = torch.rand(1, t, 3, size, size, generator=gen, dtype=torch.float64)
    if target is None:
        target = torch.rand(1, t, 3, size, size, generator=gen, dtype=torch.float64)

    def loss_value() -> torch.Tensor:
        return valid_loss(model, blur, target, mse_loss)

    model.zero_grad()
    loss_value().backward()
    params = dict(model.named_parameters())
    for name, p in params.items():
        if not torch.all(torch.isfinite(p.grad)):
            raise EstrnnError(f"non-finite gradient in {name}")

    rng = np.random.default_rng(seed)
    by_family: dict[str, list[str]] = {}
    for name in params:
        by_family.setdefault(family_of(name), []).append(name)
    chosen = [by_family[f][int(rng.integers(len(by_family[f])))]
              for f in FAMILIES if f in by_family]
    names = list(params)
    while len(chosen) < n_params_sampled:
        chosen.append(names[int(rng.integers(len(names)))])

    masks: list[torch.Tensor] = []
    hooks = [m.register_forward_hook(lambda mod, inp, out: masks.append(out > 0))
             for m in model.modules() if isinstance(m, torch.nn.ReLU)]

    def probe() -> tuple[float, list[torch.Tensor]]:
        masks.clear()
        value = loss_value().item()
        return value, list(masks)

    result = GradCheckResult()
    try:
        with torch.no_grad():
            for name in chosen:
                p = params[name]
                for _ in range(max_redraws):
                    idx = tuple(int(rng.integers(s)) for s in p.shape)
                    orig = p[idx].item()
                    p[idx] = orig + h
                    f_plus, m_plus = probe()
                    p[idx] = orig - h
                    f_minus, m_minus = probe()
                    p[idx] = orig
                    if all(torch.equal(a, b) for a, b in zip(m_plus, m_minus)):
                        break
                    result.kinks += 1
                result.records.append(GradRecord(
                    name, idx, family_of(name), p.grad[idx].item(), (f_plus - f_minus) / (2 * h)))
    finally:
        for hk in hooks:
            hk.remove()
    return result
