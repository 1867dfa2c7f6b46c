from .data import center_crop, flip, sample_batch, sample_subsequence_patch
from .gradcheck import GradCheckResult, gradient_check, micro_config
from .losses import charbonnier_loss, make_loss, mse_loss
from .schedule import lr_at
from .trainer import Checkpoint, EpochRecord, MetricLog, Trainer, train, valid_loss

__all__ = [
    "sample_subsequence_patch", "sample_batch", "flip", "center_crop",
    "gradient_check", "GradCheckResult", "micro_config",
    "mse_loss", "charbonnier_loss", "make_loss", "lr_at",
    "Checkpoint", "EpochRecord", "MetricLog", "Trainer", "train", "valid_loss",
]
