"""Random subsequence/patch sampling with joint flip augmentation."""

from __future__ import annotations

import numpy as np
import torch

from ..errors import SequenceTooShortError, ShapeError
from ..io import SequencePair


def flip(clip: np.ndarray, horizontal: bool, vertical: bool) -> np.ndarray:
    if horizontal:
        clip = clip[..., ::-1]
    if vertical:
        clip = clip[..., ::-1, :]
    return clip


def sample_subsequence_patch(dataset: list[SequencePair], length: int, patch: int,
                             rng: np.random.Generator, flip_augment: bool = True):
    """Draw one ``(blur, sharp)`` pair of ``[length, 3, patch, patch]`` tensors.

    The sequence, start frame and crop offset are uniform; the same crop and
    flips apply to every frame of both streams.
    """
    seq = dataset[int(rng.integers(len(dataset)))]
    n, _, h, w = seq.blur.shape
    if n < length:
        raise SequenceTooShortError(n, length)
    if patch > h or patch > w:
        raise ShapeError(f"patch {patch} exceeds frame size {h}x{w}")
    t0 = int(rng.integers(n - length + 1))
    y0 = int(rng.integers(h - patch + 1))
    x0 = int(rng.integers(w - patch + 1))
    hflip, vflip = (bool(b) for b in rng.integers(2, size=2)) if flip_augment else (False, False)
    window = np.s_[t0:t0 + length, :, y0:y0 + patch, x0:x0 + patch]
    blur = flip(seq.blur[window], hflip, vflip)
    sharp = flip(seq.sharp[window], hflip, vflip)
    return torch.from_numpy(blur.copy()), torch.from_numpy(sharp.copy())


def sample_batch(dataset, batch_size: int, length: int, patch: int, rng, flip_augment=True):
    pairs = [sample_subsequence_patch(dataset, length, patch, rng, flip_augment)
             for _ in range(batch_size)]
    return torch.stack([p[0] for p in pairs]), torch.stack([p[1] for p in pairs])


def center_crop(frames: np.ndarray, size: int | None = None) -> np.ndarray:
    """Crop ``[..., H, W]`` centrally to ``size`` (or the largest multiple of 4)."""
    h, w = frames.shape[-2:]
    ch = min(h, size) if size else h
    cw = min(w, size) if size else w
    ch, cw = ch - ch % 4, cw - cw % 4
    y0, x0 = (h - ch) // 2, (w - cw) // 2
    return frames[..., y0:y0 + ch, x0:x0 + cw]
