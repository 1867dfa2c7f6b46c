"""Figure rendering for reports. Always uses the non-interactive Agg backend."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}


def savefig(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # drop timestamps so repeated runs produce identical files
    metadata = {"Software": None} if path.suffix == ".png" else {}
    fig.savefig(path, metadata=metadata)
    plt.close(fig)
    return path


def efficiency_scatter(rows, path: str | Path) -> Path:
    """PSNR against log10(GMACs); upper-left is the efficient corner.

    Rows without PSNR are plotted as cost against parameter count instead.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        have_psnr = [r for r in rows if r.get("psnr") is not None]
        if have_psnr:
            xs = [math.log10(r["gmacs"]) for r in have_psnr]
            ys = [r["psnr"] for r in have_psnr]
            ax.scatter(xs, ys, color="tab:red", zorder=3)
            for x, y, r in zip(xs, ys, have_psnr):
                ax.annotate(r["name"], (x, y), textcoords="offset points", xytext=(4, 3),
                            fontsize=7)
            ax.set_ylabel("PSNR (dB)")
        else:
            xs = [math.log10(r["gmacs"]) for r in rows]
            ys = [r["mparams"] for r in rows]
            ax.scatter(xs, ys, color="tab:blue", zorder=3)
            for x, y, r in zip(xs, ys, rows):
                ax.annotate(r["name"], (x, y), textcoords="offset points", xytext=(4, 3),
                            fontsize=7)
            ax.set_ylabel("parameters (M)")
        ax.set_xlabel(r"$\log_{10}$(GMACs per frame)")
        ax.grid(alpha=0.3)
        return savefig(fig, path)


def layer_cost_bars(report, path: str | Path, top: int = 12) -> Path:
    groups: dict[str, int] = {}
    for layer in report.layers:
        key = ".".join(layer.name.split(".")[:3])
        groups[key] = groups.get(key, 0) + layer.macs
    items = sorted(groups.items(), key=lambda kv: -kv[1])[:top]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 0.25 * len(items) + 1))
        ax.barh([k for k, _ in items][::-1], [v / 1e9 for _, v in items][::-1], color="tab:gray")
        ax.set_xlabel("GMACs")
        ax.set_title(f"{report.config_name} @ {report.resolution[0]}x{report.resolution[1]}: "
                     f"{report.gmacs:.2f} GMACs")
        return savefig(fig, path)


def training_curves(history, path: str | Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3))
        ax.semilogy([r.epoch for r in history], [r.loss for r in history], label="train loss")
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        val = [(r.epoch, r.val_psnr) for r in history if r.val_psnr is not None]
        if val:
            ax2 = ax.twinx()
            ax2.plot(*zip(*val), "o-", color="tab:orange", ms=3, label="val PSNR")
            ax2.set_ylabel("val PSNR (dB)")
        return savefig(fig, path)


def sequence_scores(table, path: str | Path) -> Path:
    names = [r["sequence"] for r in table.rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(3.5, 0.5 * len(names) + 1.5), 3))
        idx = range(len(names))
        ax.bar([i - 0.2 for i in idx], [r["blur_psnr"] for r in table.rows], 0.4,
               label="blur", color="tab:gray")
        ax.bar([i + 0.2 for i in idx], [r["psnr"] for r in table.rows], 0.4,
               label="deblurred", color="tab:red")
        ax.set_xticks(list(idx))
        ax.set_xticklabels(names, rotation=45, ha="right")
        ax.set_ylabel("PSNR (dB)")
        ax.legend(frameon=False)
        return savefig(fig, path)
