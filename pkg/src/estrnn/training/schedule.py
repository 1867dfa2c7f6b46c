"""Per-epoch learning-rate schedules."""

from __future__ import annotations

import math


def lr_at(cfg, epoch: int) -> float:
    """Learning rate for ``epoch`` (0-based) under ``cfg.schedule``.

    ``step`` halves (``decay_rate``) every ``decay_every`` epochs; ``cosine``
    anneals from ``lr0`` to ``eta_min`` over ``epochs``.
    """
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    if cfg.schedule == "step":
        return cfg.lr0 * cfg.decay_rate ** (epoch // cfg.decay_every)
    progress = min(epoch, cfg.epochs) / cfg.epochs
    return cfg.eta_min + (cfg.lr0 - cfg.eta_min) * (1 + math.cos(math.pi * progress)) / 2
