"""Dataset evaluation, wall-clock benchmarking and efficiency reports."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..errors import ShapeError
from ..io import SequencePair
from ..training.data import center_crop
from .cost import CostReport, macs_model
from .metrics import psnr, ssim

EFFICIENCY_COLUMNS = ["name", "gmacs", "mparams", "ms_per_frame", "fps", "psnr", "ssim"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


@dataclass
class EvalTable:
    rows: list[dict] = field(default_factory=list)

    @property
    def mean(self) -> dict:
        keys = ("psnr", "ssim", "blur_psnr", "blur_ssim")
        return {k: float(np.mean([r[k] for r in self.rows])) for k in keys}

    def to_csv(self) -> str:
        cols = ["sequence", "frames", "psnr", "ssim", "blur_psnr", "blur_ssim"]
        lines = [",".join(cols)]
        for r in self.rows:
            lines.append(",".join(_fmt(r[c]) for c in cols))
        m = self.mean
        total = sum(r["frames"] for r in self.rows)
        lines.append(",".join(["mean", str(total)] + [_fmt(m[c]) for c in cols[2:]]))
        return "\n".join(lines) + "\n"


def _prepare(frames: np.ndarray, resize: str) -> np.ndarray:
    h, w = frames.shape[-2:]
    if h % 4 == 0 and w % 4 == 0:
        return frames
    if resize == "crop":
        return center_crop(frames)
    if resize == "pad":
        ph, pw = (-h) % 4, (-w) % 4
        return np.pad(frames, [(0, 0)] * (frames.ndim - 2) + [(0, ph), (0, pw)], mode="edge")
    raise ShapeError(f"frame size {h}x{w} is not divisible by 4; rerun with resize='crop' or 'pad'")


def deblur_sequence(model, blur: np.ndarray, frame_mode: str | None = None,
                    resize: str = "error") -> tuple[np.ndarray, tuple[int, int]]:
    """Run the model on a ``[T, 3, H, W]`` clip; output keeps the input size."""
    h, w = blur.shape[-2:]
    x = torch.from_numpy(np.ascontiguousarray(_prepare(blur, resize)))
    dtype = next(model.parameters()).dtype
    model.eval()
    with torch.no_grad():
        out, rng = model(x.unsqueeze(0).to(dtype), frame_mode)
    out = out[0].clamp(0, 1).to(torch.float32).numpy()
    if resize == "pad":
        out = out[..., :h, :w]
    return out, rng


def evaluate_dataset(model, dataset: list[SequencePair], frame_mode: str | None = None,
                     resize: str = "error") -> EvalTable:
    """Per-sequence PSNR/SSIM of the model and of the untouched blurry input.

    Both are scored on the frames the model produces; sequence scores are
    per-frame means and the table mean is over sequences.
    """
    table = EvalTable()
    for seq in dataset:
        out, (t_lo, t_hi) = deblur_sequence(model, seq.blur, frame_mode, resize)
        sharp, blur = seq.sharp[t_lo:t_hi + 1], seq.blur[t_lo:t_hi + 1]
        if resize == "crop":
            sharp, blur = center_crop(sharp), center_crop(blur)
        table.rows.append({
            "sequence": seq.name,
            "frames": t_hi - t_lo + 1,
            "psnr": float(np.mean([psnr(o, s) for o, s in zip(out, sharp)])),
            "ssim": ssim(out, sharp),
            "blur_psnr": float(np.mean([psnr(b, s) for b, s in zip(blur, sharp)])),
            "blur_ssim": ssim(blur, sharp),
        })
    return table


def time_per_frame(model, resolution: tuple[int, int], n_runs: int = 20,
                   warmup: int = 3, seed: int = 0) -> float:
    """Median wall-clock milliseconds for one steady-state frame.

    One frame is a cell step, a fusion over cached neighbor features and a
    reconstruction. The first ``warmup`` runs are discarded.
    """
    w, h = resolution
    gen = torch.Generator().manual_seed(seed)
    dtype = next(model.parameters()).dtype
    frame = torch.rand(1, 3, h, w, generator=gen).to(dtype)
    model.eval()
    with torch.no_grad():
        hidden = model.init_hidden(frame)
        f_t, _ = model.cell(frame, hidden)
        n_nb = model.cfg.context_past + model.cfg.context_future
        neighbors = [f_t.clone() for _ in range(n_nb)]
        times = []
        for i in range(warmup + n_runs):
            start = time.perf_counter()
            f, _ = model.cell(frame, hidden)
            model.decode(f, neighbors, frame)
            elapsed = (time.perf_counter() - start) * 1000.0
            if i >= warmup:
                times.append(elapsed)
    return statistics.median(times)


def hardware_info() -> dict:
    return {
        "platform": platform.platform(),
        "processor": platform.processor() or platform.machine(),
        "python": platform.python_version(),
        "torch": torch.__version__,
        "threads": torch.get_num_threads(),
    }


def efficiency_rows(entries, resolution=(1280, 720), dataset=None, benchmark=False,
                    n_runs: int = 20, warmup: int = 3) -> tuple[list[dict], list[CostReport]]:
    """``entries`` are ``(name, model)`` pairs; a ``ModelConfig`` may stand in
    for a model when neither timing nor a dataset is requested."""
    rows, reports = [], []
    for name, item in entries:
        cfg = getattr(item, "cfg", item)
        report = macs_model(cfg, resolution)
        row = {"name": name, "gmacs": report.gmacs, "mparams": report.mparams,
               "ms_per_frame": None, "fps": None, "psnr": None, "ssim": None}
        if benchmark:
            report.ms_per_frame = time_per_frame(item, resolution, n_runs, warmup)
            row["ms_per_frame"] = report.ms_per_frame
            row["fps"] = report.fps
        if dataset is not None:
            table = evaluate_dataset(item, dataset)
            row["psnr"], row["ssim"] = table.mean["psnr"], table.mean["ssim"]
        rows.append(row)
        reports.append(report)
    return rows, reports


def efficiency_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EFFICIENCY_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in EFFICIENCY_COLUMNS])
    return buf.getvalue()


def scatter_csv(rows) -> str:
    lines = ["log10_gmacs,psnr,label"]
    for r in rows:
        lines.append(f"{math.log10(r['gmacs']):.6f},{_fmt(r['psnr'])},{r['name']}")
    return "\n".join(lines) + "\n"


def benchmark_and_report(entries, out_dir: str | Path, resolution=(1280, 720), dataset=None,
                         benchmark: bool = True, n_runs: int = 20, warmup: int = 3,
                         figure: bool = True) -> list[dict]:
    """Write ``efficiency.csv``, ``scatter.csv``, ``efficiency_meta.json`` and
    ``efficiency.png`` under ``out_dir``; returns the rows."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, _ = efficiency_rows(entries, resolution, dataset, benchmark, n_runs, warmup)
    (out_dir / "efficiency.csv").write_text(efficiency_csv(rows))
    (out_dir / "scatter.csv").write_text(scatter_csv(rows))
    meta = {"resolution": list(resolution), "hardware": hardware_info() if benchmark else None,
            "timing": {"runs": n_runs, "warmup": warmup, "statistic": "median"}
            if benchmark else None}
    (out_dir / "efficiency_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    if figure:
        from ..plotting import efficiency_scatter

        efficiency_scatter(rows, out_dir / "efficiency.png")
    return rows
