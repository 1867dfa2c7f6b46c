"""Command-line entry point: ``estrnn {train,deblur,eval,synthesize,profile,sweep}``.

Exit codes: 0 success, 1 runtime error, 2 bad configuration or arguments,
3 missing input files. Failures print one JSON line to stderr.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import torch

from .config import ModelConfig, ResolvedConfig, parse_config, split_override
from .errors import ConfigError, EstrnnError

log = logging.getLogger("estrnn")

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_MISSING = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, key: str | None = None):
        super().__init__(message)
        self.code, self.kind, self.key = code, kind, key


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_CONFIG, "usage", message)


def _threads() -> int:
    value = os.environ.get("ESTRNN_THREADS")
    if not value:
        return 1
    try:
        n = int(value)
    except ValueError:
        raise CliError(EXIT_CONFIG, "config", f"ESTRNN_THREADS must be an integer, got {value!r}",
                       key="ESTRNN_THREADS") from None
    torch.set_num_threads(max(1, n))
    return max(1, n)


def _resolve(args) -> ResolvedConfig:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides += [f"train.seed={args.seed}", f"synthesis.seed={args.seed}"]
    if args.config and not Path(args.config).exists():
        raise FileNotFoundError(f"config file not found: {args.config}")
    try:
        return parse_config(args.config, overrides)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}", key="<file>") from None


def _output_dir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _snapshot(out: Path, cfg: ResolvedConfig, extra: dict | None = None) -> None:
    (out / "config.resolved.json").write_text(cfg.to_json())
    if extra:
        (out / "invocation.json").write_text(json.dumps(extra, indent=2, sort_keys=True) + "\n")


def _load_model(path: str):
    from .model.paramset import load_model
    from .training.trainer import Checkpoint

    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    if p.suffix == ".pt":
        return Checkpoint.load(p).model().eval()
    return load_model(p)


def _parse_resolution(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"resolution must look like 1280x720, got {text!r}",
                          key="resolution") from None
    return w, h


# -- subcommands ------------------------------------------------------------

def cmd_synthesize(args, cfg: ResolvedConfig) -> None:
    from .synthesis import build_dataset, build_dataset_from_arrays, assign_splits
    from .toy import render_clip

    syn = cfg.synthesis
    changes = {}
    if args.n is not None:
        changes["n_subframes"] = args.n
        changes.setdefault("stride", args.n)
    if args.stride is not None:
        changes["stride"] = args.stride
    if args.noise_sigma is not None:
        changes["noise_sigma"] = args.noise_sigma
    if changes:
        syn = type(syn)(**{**syn.to_dict(), **changes})
        cfg = ResolvedConfig(cfg.model, cfg.train, syn)
    out = _output_dir(args)
    _snapshot(out, cfg)
    splits = _parse_splits(args.splits)
    workers = _threads()
    if args.toy:
        w, h = _parse_resolution(args.toy_size)
        names = [f"toy{i:03d}" for i in range(args.toy)]
        sources = [(name, (lambda i=i: render_clip(args.toy_frames, h, w, seed=syn.seed * 1000 + i,
                                                   speed=args.toy_speed)))
                   for i, name in enumerate(names)]
        manifest = build_dataset_from_arrays(sources, out, syn, assign_splits(names, splits),
                                             workers)
    else:
        if not args.input:
            raise ConfigError("synthesize needs --input or --toy", key="input")
        manifest = build_dataset(args.input, out, syn, splits, workers)
    counts = {s.name: s.n_frames for s in manifest.sequences}
    print(json.dumps({"sequences": len(counts), "pairs": counts, "skipped": manifest.skipped}))


def _parse_splits(text: str | None):
    if not text:
        return None
    spec = {}
    for part in text.split(","):
        name, _, frac = part.partition("=")
        try:
            spec[name.strip()] = float(frac)
        except ValueError:
            raise ConfigError(f"bad split spec {part!r}; use name=fraction", key="splits") from None
    return spec


def cmd_train(args, cfg: ResolvedConfig) -> None:
    from .io import DatasetManifest, load_split
    from .plotting import training_curves
    from .training.trainer import Checkpoint, Trainer

    out = _output_dir(args)
    _snapshot(out, cfg)
    _threads()
    train_set = load_split(args.data, args.train_split)
    manifest = DatasetManifest.load(args.data)
    val_set = load_split(args.data, args.val_split) if args.val_split in manifest.splits() else None
    if args.resume:
        if not Path(args.resume).exists():
            raise FileNotFoundError(f"checkpoint not found: {args.resume}")
        trainer = Trainer.resume(Checkpoint.load(args.resume), train_set, val_set, out, cfg.train)
    else:
        trainer = Trainer(cfg.model, cfg.train, train_set, val_set, out)
    trainer.fit()
    trainer.save(out)
    training_curves(trainer.history, out / "training.png")
    last = trainer.history[-1] if trainer.history else None
    print(json.dumps({"epochs": trainer.epoch, "loss": None if last is None else last.loss}))


def _sequences_for(input_path: Path, split: str):
    """Yield ``(relative output dir, blur frames)`` for a dataset root or a sequence dir."""
    from .io import DatasetManifest, read_frames

    if (input_path / "manifest.json").exists():
        manifest = DatasetManifest.load(input_path)
        seqs = [s for s in manifest.sequences if s.split == split]
        if not seqs:
            raise FileNotFoundError(f"split {split!r} not present in {input_path}")
        for s in seqs:
            yield Path(split, s.name), read_frames(input_path / split / s.name / manifest.blur_dir)
    elif (input_path / "blur").is_dir():
        yield Path(input_path.name), read_frames(input_path / "blur")
    else:
        yield Path(input_path.name), read_frames(input_path)


def cmd_deblur(args, cfg: ResolvedConfig) -> None:
    from .evaluation.report import deblur_sequence
    from .io import FRAME_FMT, write_png

    inp = Path(args.input)
    if not inp.exists():
        raise FileNotFoundError(f"input not found: {inp}")
    out = _output_dir(args)
    _snapshot(out, cfg, {"checkpoint": args.checkpoint, "input": str(inp)})
    _threads()
    model = _load_model(args.checkpoint)
    written = 0
    for rel, blur in _sequences_for(inp, args.split):
        frames, (t_lo, _) = deblur_sequence(model, blur, args.frame_mode, args.resize)
        for i, frame in enumerate(frames):
            write_png(out / rel / "deblur" / FRAME_FMT.format(t_lo + i), frame)
        written += len(frames)
    print(json.dumps({"frames": written}))


def cmd_eval(args, cfg: ResolvedConfig) -> None:
    from .evaluation.report import evaluate_dataset
    from .io import load_split
    from .plotting import sequence_scores

    out = _output_dir(args)
    _snapshot(out, cfg, {"checkpoint": args.checkpoint, "data": args.data, "split": args.split})
    _threads()
    model = _load_model(args.checkpoint)
    dataset = load_split(args.data, args.split)
    table = evaluate_dataset(model, dataset, args.frame_mode, args.resize)
    (out / "metrics.csv").write_text(table.to_csv())
    sequence_scores(table, out / "metrics.png")
    print(json.dumps(table.mean))


def cmd_profile(args, cfg: ResolvedConfig) -> None:
    from .evaluation.report import benchmark_and_report
    from .plotting import layer_cost_bars
    from .evaluation.cost import macs_model

    out = _output_dir(args)
    resolution = _parse_resolution(args.resolution)
    _snapshot(out, cfg, {"arch": args.arch, "frames": args.frames, "resolution": resolution,
                         "checkpoint": args.checkpoint})
    _threads()
    base = cfg.model.to_dict()
    entries = []
    for arch in args.arch or ([] if args.checkpoint else [cfg.model.variant]):
        mc = ModelConfig.from_names(arch, args.frames or cfg.model.frames_name,
                                    **{k: v for k, v in base.items()
                                       if k not in ("n_blocks", "n_channels", "n_past",
                                                    "n_future", "hidden_channels")})
        entries.append((mc.name, mc))
    for path in args.checkpoint or []:
        model = _load_model(path)
        entries.append((f"{Path(path).stem}:{model.cfg.name}", model))
    dataset = None
    if args.data:
        from .io import load_split

        dataset = load_split(args.data, args.split)
    if (args.benchmark or dataset is not None) and any(
            isinstance(item, ModelConfig) for _, item in entries):
        from .model.network import ESTRNN

        entries = [(n, ESTRNN(item, seed=cfg.train.seed) if isinstance(item, ModelConfig) else item)
                   for n, item in entries]
    for name, item in entries:
        report = macs_model(getattr(item, "cfg", item), resolution)
        safe = name.replace(":", "_")
        (out / f"cost_{safe}.csv").write_text(report.to_csv())
        layer_cost_bars(report, out / f"cost_{safe}.png")
    rows = benchmark_and_report(entries, out, resolution, dataset, args.benchmark, args.runs,
                                args.warmup)
    print(json.dumps([{"name": r["name"], "gmacs": round(r["gmacs"], 4)} for r in rows]))


def _expand(value: str) -> list:
    """``60..90:5`` -> [60, 65, ..., 90]; ``a,b,c`` -> list; otherwise a single value."""
    if ".." in value:
        lo, _, rest = value.partition("..")
        hi, _, step = rest.partition(":")
        lo, hi, step = int(lo), int(hi), int(step or 1)
        return list(range(lo, hi + 1, step))
    return [json.loads(v) if v.strip().lstrip("-").replace(".", "", 1).isdigit() else v
            for v in value.split(",")]


def cmd_sweep(args, cfg: ResolvedConfig) -> int:
    out = _output_dir(args)
    if not args.command:
        raise ConfigError("sweep needs a subcommand after --", key="command")
    command = [c for c in args.command if c != "--"]
    keys, values = [], []
    for item in args.grid or []:
        section, key, raw = split_override(item)
        keys.append(f"{section}.{key}")
        values.append(_expand(raw))
    summary = ["run,exit_code,output"]
    eff_rows = []
    status = EXIT_OK
    for combo in itertools.product(*values):
        label = "_".join(f"{k.split('.')[-1]}-{v}" for k, v in zip(keys, combo)) or "run"
        run_out = out / label
        sets = []
        for k, v in zip(keys, combo):
            sets += ["--set", f"{k}={json.dumps(v) if not isinstance(v, str) else v}"]
        code = main(command + sets + ["--output", str(run_out)])
        status = status or code
        summary.append(f"{label},{code},{run_out}")
        eff = run_out / "efficiency.csv"
        if eff.exists():
            lines = eff.read_text().splitlines()
            eff_rows.extend(lines[1:])
            header = lines[0]
    (out / "sweep.csv").write_text("\n".join(summary) + "\n")
    if eff_rows:
        (out / "efficiency.csv").write_text("\n".join([header, *eff_rows]) + "\n")
        import csv
        from .plotting import efficiency_scatter

        rows = []
        for rec in csv.DictReader((out / "efficiency.csv").open()):
            rows.append({"name": rec["name"], "gmacs": float(rec["gmacs"]),
                         "mparams": float(rec["mparams"]),
                         "psnr": float(rec["psnr"]) if rec["psnr"] else None})
        efficiency_scatter(rows, out / "efficiency.png")
    return status


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config field (repeatable)")
    common.add_argument("--output", "-o", default="runs/out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for training and synthesis")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="estrnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("synthesize", parents=[common], help="build a blurry/sharp dataset")
    p.add_argument("--input", help="directory of high-fps sequences (<seq>/*.png)")
    p.add_argument("--toy", type=int, default=0, help="render N procedural sequences instead")
    p.add_argument("--toy-frames", type=int, default=96)
    p.add_argument("--toy-size", default="64x64")
    p.add_argument("--toy-speed", type=float, default=1.0)
    p.add_argument("--n", type=int, help="subframes averaged per blurry frame")
    p.add_argument("--stride", type=int, help="subframes advanced per pair")
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--splits", help="e.g. train=0.6,val=0.2,test=0.2 (default: all train)")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("train", parents=[common], help="train a model")
    p.add_argument("--data", required=True, help="dataset root (with manifest.json)")
    p.add_argument("--train-split", default="train")
    p.add_argument("--val-split", default="val")
    p.add_argument("--resume", help="checkpoint.pt to resume from")
    p.set_defaults(func=cmd_train)

    for name, func, helptext in (("deblur", cmd_deblur, "deblur frames to PNG"),
                                 ("eval", cmd_eval, "PSNR/SSIM on a dataset split")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--checkpoint", required=True, help="model.params or checkpoint.pt")
        if name == "deblur":
            p.add_argument("--input", required=True, help="dataset root or sequence directory")
            p.add_argument("--split", default="test")
        else:
            p.add_argument("--data", required=True)
            p.add_argument("--split", default="test")
        p.add_argument("--frame-mode", choices=["valid", "edge"])
        p.add_argument("--resize", choices=["error", "crop", "pad"], default="error")
        p.set_defaults(func=func)

    p = sub.add_parser("profile", parents=[common], help="MACs, parameters and timing")
    p.add_argument("--arch", nargs="+", help="variant names such as B9C80")
    p.add_argument("--frames", help="neighbor counts such as F2P2")
    p.add_argument("--resolution", default="1280x720")
    p.add_argument("--checkpoint", nargs="+", help="trained models to include")
    p.add_argument("--benchmark", action="store_true", help="measure wall-clock time")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--data", help="dataset root for PSNR/SSIM columns")
    p.add_argument("--split", default="test")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("sweep", parents=[common], help="run a subcommand over a grid")
    p.add_argument("--grid", action="append", metavar="SECTION.KEY=A..B:STEP",
                   help="list-valued override (repeatable)")
    p.add_argument("command", nargs=argparse.REMAINDER, help="-- SUBCOMMAND [ARGS]")
    p.set_defaults(func=cmd_sweep)
    return parser


def _fail(code: int, kind: str, message: str, key: str | None = None) -> int:
    payload = {"error": kind, "message": str(message).replace("\n", " ")}
    if key:
        payload["key"] = key
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _resolve(args)
        result = args.func(args, cfg)
        return int(result or EXIT_OK)
    except CliError as exc:
        return _fail(exc.code, exc.kind, str(exc), exc.key)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), exc.key)
    except FileNotFoundError as exc:
        return _fail(EXIT_MISSING, "missing_file", str(exc))
    except EstrnnError as exc:
        return _fail(EXIT_ERROR, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
