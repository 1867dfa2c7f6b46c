"""Blurry/sharp pair synthesis from high frame-rate sharp video.

A blurry frame is the camera-response-encoded mean of N consecutive sharp
subframes taken in linear space; its sharp partner is the subframe at the
center of the exposure window.
"""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import SynthesisConfig
from .errors import RangeError, ShapeError
from .io import (BLUR_DIR, SHARP_DIR, DatasetManifest, SequenceEntry, read_frames,
                 write_frames)

log = logging.getLogger(__name__)

DEFAULT_SPLITS = {"train": 0.6, "val": 0.2, "test": 0.2}


def crf_transform(img, cfg: SynthesisConfig, direction: str) -> np.ndarray:
    """Apply (``encode``) or invert (``linearize``) the camera response."""
    img = np.asarray(img)
    if img.size and (np.nanmin(img) < 0 or np.nanmax(img) > 1 or not np.all(np.isfinite(img))):
        raise RangeError("CRF input must lie in [0, 1]")
    if direction not in ("encode", "linearize"):
        raise ValueError(f"direction must be 'encode' or 'linearize', got {direction!r}")
    if cfg.crf == "identity":
        return img.copy()
    exponent = 1.0 / cfg.gamma if direction == "encode" else cfg.gamma
    return np.power(img, exponent)


def center_index(n: int, mode: str = "floor") -> int:
    if n < 1:
        raise ShapeError("need at least one subframe")
    return (n - 1) // 2 if mode == "floor" else n // 2


def select_center_sharp(subframes, mode: str = "floor") -> np.ndarray:
    subframes = np.asarray(subframes)
    if subframes.shape[0] == 0:
        raise ShapeError("need at least one subframe")
    return subframes[center_index(subframes.shape[0], mode)]


def synthesize_blur(subframes, cfg: SynthesisConfig, rng: np.random.Generator | None = None):
    """Mean of ``[N, 3, H, W]`` encoded subframes in linear space, re-encoded,
    plus optional clamped Gaussian noise in the encoded domain."""
    subframes = np.asarray(subframes, dtype=np.float64)
    if subframes.shape[0] != cfg.n_subframes:
        raise ShapeError(f"expected {cfg.n_subframes} subframes, got {subframes.shape[0]}")
    linear = crf_transform(subframes, cfg, "linearize")
    blur = crf_transform(np.clip(linear.mean(axis=0), 0.0, 1.0), cfg, "encode")
    if cfg.noise_sigma > 0:
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        blur = np.clip(blur + rng.normal(0.0, cfg.noise_sigma, blur.shape), 0.0, 1.0)
    return blur


def window_count(n_frames: int, n_subframes: int, stride: int) -> int:
    if n_frames < n_subframes:
        return 0
    return (n_frames - n_subframes) // stride + 1


def sequence_rng(cfg: SynthesisConfig, name: str) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, zlib.crc32(name.encode())])


def synthesize_sequence(frames, cfg: SynthesisConfig, name: str = "seq"):
    """Slide an N-wide window by ``stride`` over ``[n, 3, H, W]`` sharp frames.

    Returns float32 ``(blur, sharp)`` arrays of shape ``[k, 3, H, W]``.
    """
    frames = np.asarray(frames)
    k = window_count(frames.shape[0], cfg.n_subframes, cfg.stride)
    if k == 0:
        raise ShapeError(f"{name}: {frames.shape[0]} frames < {cfg.n_subframes} subframes")
    rng = sequence_rng(cfg, name)
    blur, sharp = [], []
    for i in range(k):
        window = frames[i * cfg.stride: i * cfg.stride + cfg.n_subframes]
        blur.append(synthesize_blur(window, cfg, rng))
        sharp.append(select_center_sharp(window, cfg.center))
    return np.stack(blur).astype(np.float32), np.stack(sharp).astype(np.float32)


def assign_splits(names: list[str], split_spec: dict | None = None) -> dict[str, str]:
    """Map sequence name -> split.

    ``split_spec`` maps split name to either an explicit list of sequence
    names or a fraction; fractions are filled in sorted-name order.
    """
    split_spec = split_spec or {"train": 1.0}
    names = sorted(names)
    out: dict[str, str] = {}
    explicit = {k: v for k, v in split_spec.items() if isinstance(v, (list, tuple))}
    for split, members in explicit.items():
        for n in members:
            out[n] = split
    rest = [n for n in names if n not in out]
    fractions = {k: float(v) for k, v in split_spec.items() if k not in explicit}
    if fractions:
        total = sum(fractions.values())
        bounds, acc = [], 0.0
        for split, frac in fractions.items():
            acc += frac / total
            bounds.append((split, round(acc * len(rest))))
        start = 0
        for split, end in bounds:
            for n in rest[start:end]:
                out[n] = split
            start = end
    return out


def build_dataset(highfps_dir: str | Path, out_root: str | Path, cfg: SynthesisConfig,
                  split_spec: dict | None = None, workers: int = 1) -> DatasetManifest:
    """Synthesize every ``<highfps_dir>/<seq>/*.png`` sequence into the dataset layout."""
    highfps_dir, out_root = Path(highfps_dir), Path(out_root)
    if not highfps_dir.is_dir():
        raise FileNotFoundError(f"no such directory: {highfps_dir}")
    seq_dirs = sorted(p for p in highfps_dir.iterdir() if p.is_dir())
    if not seq_dirs:
        raise FileNotFoundError(f"no sequence directories under {highfps_dir}")
    splits = assign_splits([p.name for p in seq_dirs], split_spec)
    return build_dataset_from_arrays(
        ((p.name, lambda p=p: read_frames(p)) for p in seq_dirs if p.name in splits),
        out_root, cfg, splits, workers)


def build_dataset_from_arrays(sources, out_root: str | Path, cfg: SynthesisConfig,
                              splits: dict[str, str] | None = None,
                              workers: int = 1) -> DatasetManifest:
    """``sources`` yields ``(name, frames_or_loader)``; loaders are zero-arg callables."""
    out_root = Path(out_root)
    sources = list(sources)
    splits = splits or {name: "train" for name, _ in sources}

    def run(item):
        name, frames = item
        frames = frames() if callable(frames) else frames
        n = frames.shape[0]
        if n < cfg.n_subframes:
            return name, None, n, frames.shape
        blur, sharp = synthesize_sequence(frames, cfg, name)
        base = out_root / splits[name] / name
        write_frames(base / BLUR_DIR, blur)
        write_frames(base / SHARP_DIR, sharp)
        return name, blur.shape[0], n, frames.shape

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run, sources))

    resolution = None
    manifest = DatasetManifest(resolution=(0, 0), synthesis=cfg.to_dict())
    for name, k, n, shape in results:
        if k is None:
            log.warning("skipping %s: %d frames < %d subframes", name, n, cfg.n_subframes)
            manifest.skipped.append({"name": name, "n_frames": n,
                                     "reason": f"fewer than {cfg.n_subframes} frames"})
            continue
        res = (int(shape[-1]), int(shape[-2]))
        if resolution is not None and res != resolution:
            raise ShapeError(f"{name}: resolution {res} differs from {resolution}")
        resolution = res
        manifest.sequences.append(SequenceEntry(name=name, split=splits[name], n_frames=k))
    manifest.resolution = resolution or (0, 0)
    out_root.mkdir(parents=True, exist_ok=True)
    manifest.save(out_root)
    return manifest
