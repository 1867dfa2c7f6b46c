"""Optimization loop, checkpointing and the per-epoch metric log."""

from __future__ import annotations

import copy
import logging
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..config import ModelConfig, TrainConfig
from ..errors import ConfigError, TrainingDivergedError
from ..evaluation.metrics import psnr_video
from ..io import SequencePair
from ..model.network import ESTRNN
from ..model.paramset import ParamSet
from .data import center_crop, sample_batch
from .losses import make_loss
from .schedule import lr_at

log = logging.getLogger(__name__)

LOG_HEADER = "epoch,lr,loss,val_psnr"


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    loss: float
    val_psnr: float | None = None

    def csv_row(self) -> str:
        val = "" if self.val_psnr is None else f"{self.val_psnr:.6f}"
        return f"{self.epoch},{self.lr:.8e},{self.loss:.8e},{val}"


class MetricLog:
    """Append-only CSV log; safe to share between threads."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        if self.path and not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(LOG_HEADER + "\n")

    def append(self, record: EpochRecord) -> None:
        if self.path is None:
            return
        with self._lock, self.path.open("a") as fh:
            fh.write(record.csv_row() + "\n")


@dataclass
class Checkpoint:
    params: ParamSet
    model_config: ModelConfig
    train_config: TrainConfig
    optimizer_state: dict
    epoch: int
    rng_state: dict
    history: list[EpochRecord] = field(default_factory=list)

    def save(self, path: str | Path) -> None:
        torch.save({
            "params": self.params.to_bytes(self.model_config),
            "train_config": self.train_config.to_dict(),
            "optimizer_state": self.optimizer_state,
            "epoch": self.epoch,
            "rng_state": self.rng_state,
            "history": [vars(r) for r in self.history],
        }, path)

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        blob = torch.load(path, map_location="cpu", weights_only=False)
        params, model_cfg = ParamSet.from_bytes(blob["params"])
        return cls(params, model_cfg, TrainConfig(**blob["train_config"]),
                   blob["optimizer_state"], blob["epoch"], blob["rng_state"],
                   [EpochRecord(**r) for r in blob["history"]])

    def model(self) -> ESTRNN:
        model = ESTRNN(self.model_config, seed=None)
        self.params.load_into(model)
        return model


def valid_loss(model: ESTRNN, blur: torch.Tensor, sharp: torch.Tensor, loss_fn):
    """Loss over the model's valid output frames only."""
    out, (t_lo, t_hi) = model(blur)
    return loss_fn(out, sharp[:, t_lo:t_hi + 1])


class Trainer:
    def __init__(self, model_cfg: ModelConfig, train_cfg: TrainConfig,
                 train_set: list[SequencePair], val_set: list[SequencePair] | None = None,
                 out_dir: str | Path | None = None, dtype=torch.float32):
        if not train_set:
            raise ConfigError("training set is empty", key="dataset")
        train_cfg.check_model(model_cfg)
        self.model_cfg, self.cfg = model_cfg, train_cfg
        self.train_set, self.val_set = train_set, val_set
        self.out_dir = Path(out_dir) if out_dir else None
        self.model = ESTRNN(model_cfg, seed=train_cfg.seed).to(dtype)
        self.dtype = dtype
        self.optimizer = torch.optim.Adam(
            self.model.parameters(), lr=train_cfg.lr0,
            betas=(train_cfg.beta1, train_cfg.beta2), eps=train_cfg.adam_eps)
        self.rng = np.random.default_rng(train_cfg.seed)
        self.loss_fn = make_loss(train_cfg)
        self.epoch = 0
        self.history: list[EpochRecord] = []
        self.metric_log = MetricLog(self.out_dir / "metrics.csv" if self.out_dir else None)

    @property
    def iters_per_epoch(self) -> int:
        if self.cfg.iters_per_epoch:
            return self.cfg.iters_per_epoch
        return max(1, math.ceil(len(self.train_set) / self.cfg.batch_size))

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(ParamSet.from_module(self.model), self.model_cfg, self.cfg,
                          copy.deepcopy(self.optimizer.state_dict()), self.epoch,
                          copy.deepcopy(self.rng.bit_generator.state), list(self.history))

    @classmethod
    def resume(cls, ckpt: Checkpoint, train_set, val_set=None, out_dir=None,
               train_cfg: TrainConfig | None = None) -> "Trainer":
        trainer = cls(ckpt.model_config, train_cfg or ckpt.train_config, train_set, val_set,
                      out_dir)
        ckpt.params.load_into(trainer.model)
        trainer.optimizer.load_state_dict(ckpt.optimizer_state)
        trainer.rng.bit_generator.state = ckpt.rng_state
        trainer.epoch = ckpt.epoch
        trainer.history = list(ckpt.history)
        return trainer

    def step(self, blur: torch.Tensor, sharp: torch.Tensor) -> float:
        self.model.train()
        self.optimizer.zero_grad(set_to_none=True)
        loss = valid_loss(self.model, blur.to(self.dtype), sharp.to(self.dtype), self.loss_fn)
        value = loss.item()
        if not math.isfinite(value):
            raise TrainingDivergedError(self.epoch, -1, value)
        loss.backward()
        if self.cfg.grad_clip:
            torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.cfg.grad_clip)
        self.optimizer.step()
        return value

    def validate(self) -> float | None:
        if not self.val_set:
            return None
        self.model.eval()
        scores = []
        with torch.no_grad():
            for seq in self.val_set:
                blur = torch.from_numpy(center_crop(seq.blur, self.cfg.val_crop).copy())
                sharp = torch.from_numpy(center_crop(seq.sharp, self.cfg.val_crop).copy())
                out, (t_lo, t_hi) = self.model(blur.unsqueeze(0).to(self.dtype))
                scores.append(psnr_video(out[0].clamp(0, 1), sharp[t_lo:t_hi + 1]))
        return float(np.mean(scores))

    def run_epoch(self) -> EpochRecord:
        lr = lr_at(self.cfg, self.epoch)
        for group in self.optimizer.param_groups:
            group["lr"] = lr
        losses = []
        for i in range(self.iters_per_epoch):
            blur, sharp = sample_batch(self.train_set, self.cfg.batch_size, self.cfg.subseq_len,
                                       self.cfg.patch, self.rng, self.cfg.flip_augment)
            try:
                losses.append(self.step(blur, sharp))
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(self.epoch, i, exc.loss) from None
        self.epoch += 1
        val = None
        if self.epoch % self.cfg.val_every == 0 or self.epoch == self.cfg.epochs:
            val = self.validate()
        record = EpochRecord(self.epoch - 1, lr, float(np.mean(losses)), val)
        self.history.append(record)
        self.metric_log.append(record)
        log.info("epoch %d lr %.3e loss %.6f%s", record.epoch, lr, record.loss,
                 "" if val is None else f" val_psnr {val:.3f}")
        return record

    def fit(self, until_epoch: int | None = None) -> Checkpoint:
        until = self.cfg.epochs if until_epoch is None else min(until_epoch, self.cfg.epochs)
        while self.epoch < until:
            self.run_epoch()
            if self.out_dir and (self.epoch % self.cfg.checkpoint_every == 0
                                 or self.epoch == until):
                self.save(self.out_dir)
        return self.checkpoint()

    def save(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ckpt = self.checkpoint()
        ckpt.save(out_dir / "checkpoint.pt")
        ckpt.params.save(out_dir / "model.params", self.model_cfg)


def train(train_cfg: TrainConfig, model_cfg: ModelConfig, dataset: list[SequencePair],
          val_set: list[SequencePair] | None = None, out_dir: str | Path | None = None) -> Checkpoint:
    """Train from scratch for ``train_cfg.epochs`` epochs and return the final checkpoint."""
    return Trainer(model_cfg, train_cfg, dataset, val_set, out_dir).fit()
