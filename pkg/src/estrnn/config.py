"""Configuration dataclasses and the structured-text config parser.

Config files are JSON objects with up to three sections::

    {"model": {...}, "train": {...}, "synthesis": {...}}

Missing sections and keys take defaults. Overrides are ``section.key=value``
strings whose values are parsed as JSON when possible (``true``, ``3``,
``1e-4``) and as bare strings otherwise.
"""

from __future__ import annotations

import dataclasses
import json
import re
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError

_VARIANT_RE = re.compile(r"^B(\d+)C(\d+)$")
_FRAMES_RE = re.compile(r"^F(\d+)P(\d+)$")


@dataclass(frozen=True)
class ModelConfig:
    n_blocks: int = 9
    n_channels: int = 80
    growth_rate: int = 32
    n_dense_layers: int = 3
    n_past: int = 2
    n_future: int = 2
    use_fusion: bool = True
    use_rdb_cell: bool = True
    use_gsa: bool = True
    downsample_factor: int = 4
    hidden_channels: Optional[int] = None
    gate_reduction: int = 4
    global_skip: bool = False
    frame_mode: str = "valid"
    # subtracted from frames before the cell; the skip path sees raw frames
    input_offset: float = 0.5

    def __post_init__(self):
        if self.hidden_channels is None:
            object.__setattr__(self, "hidden_channels", self.n_channels)
        for name in ("n_blocks", "n_channels", "growth_rate", "n_dense_layers",
                     "hidden_channels", "gate_reduction"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", key=name)
        for name in ("n_past", "n_future"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0", key=name)
        if self.downsample_factor != 4:
            raise ConfigError("downsample_factor is fixed at 4", key="downsample_factor")
        if self.use_gsa and not self.use_fusion:
            raise ConfigError("use_gsa requires use_fusion", key="use_gsa")
        if self.frame_mode not in ("valid", "edge"):
            raise ConfigError("frame_mode must be 'valid' or 'edge'", key="frame_mode")

    @property
    def variant(self) -> str:
        return f"B{self.n_blocks}C{self.n_channels}"

    @property
    def frames_name(self) -> str:
        return f"F{self.n_future}P{self.n_past}"

    @property
    def name(self) -> str:
        name = f"{self.variant}-{self.frames_name}"
        flags = []
        if not self.use_fusion:
            flags.append("nofusion")
        elif not self.use_gsa:
            flags.append("concat")
        if not self.use_rdb_cell:
            flags.append("resblock")
        return "-".join([name, *flags])

    @property
    def context_past(self) -> int:
        """Past frames the output actually consumes (0 without fusion)."""
        return self.n_past if self.use_fusion else 0

    @property
    def context_future(self) -> int:
        return self.n_future if self.use_fusion else 0

    @property
    def min_frames(self) -> int:
        if self.frame_mode == "edge":
            return 1
        return self.context_past + self.context_future + 1

    @classmethod
    def from_names(cls, variant: str = "B9C80", frames: str | None = None, **kwargs) -> "ModelConfig":
        """Build from ``B#C#`` / ``F#P#`` names, e.g. ``from_names("B15C80", "F2P2")``."""
        m = _VARIANT_RE.match(variant)
        if not m:
            raise ConfigError(f"bad variant name {variant!r}; expected B<int>C<int>", key="arch")
        kwargs.update(n_blocks=int(m.group(1)), n_channels=int(m.group(2)))
        if frames is not None:
            f = _FRAMES_RE.match(frames)
            if not f:
                raise ConfigError(f"bad frames name {frames!r}; expected F<int>P<int>", key="frames")
            kwargs.update(n_future=int(f.group(1)), n_past=int(f.group(2)))
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


TRAIN_RECIPES: dict[str, dict[str, Any]] = {
    # GOPRO/REDS recipe
    "synthetic": dict(epochs=500, batch_size=4, subseq_len=10, patch=256, lr0=1e-4,
                      schedule="step", decay_rate=0.5, decay_every=200, loss="mse"),
    # real-world recipe
    "bsd": dict(epochs=500, batch_size=8, subseq_len=8, patch=256, lr0=3e-4,
                schedule="cosine", eta_min=0.0, loss="charbonnier", charbonnier_eps=1e-3),
    # desk-scale overfit runs on toy clips
    "toy": dict(epochs=300, batch_size=4, subseq_len=8, patch=64, lr0=3e-3,
                schedule="cosine", eta_min=0.0, loss="mse", iters_per_epoch=1),
}


@dataclass(frozen=True)
class TrainConfig:
    recipe: str = "synthetic"
    epochs: int = 500
    batch_size: int = 4
    subseq_len: int = 10
    patch: int = 256
    lr0: float = 1e-4
    schedule: str = "step"
    decay_rate: float = 0.5
    decay_every: int = 200
    eta_min: float = 0.0
    loss: str = "mse"
    charbonnier_eps: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    flip_augment: bool = True
    seed: int = 0
    iters_per_epoch: Optional[int] = None
    grad_clip: Optional[float] = None
    val_every: int = 10
    val_crop: Optional[int] = None
    checkpoint_every: int = 50

    def __post_init__(self):
        if self.recipe not in TRAIN_RECIPES:
            raise ConfigError(f"recipe must be one of {sorted(TRAIN_RECIPES)}", key="recipe")
        if self.schedule not in ("step", "cosine"):
            raise ConfigError("schedule must be 'step' or 'cosine'", key="schedule")
        if self.loss not in ("mse", "charbonnier"):
            raise ConfigError("loss must be 'mse' or 'charbonnier'", key="loss")
        if self.patch < 4 or self.patch % 4:
            raise ConfigError("patch must be a positive multiple of 4", key="patch")
        if self.charbonnier_eps <= 0:
            raise ConfigError("charbonnier_eps must be > 0", key="charbonnier_eps")
        for name in ("epochs", "batch_size", "subseq_len", "decay_every", "val_every",
                     "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", key=name)
        if self.iters_per_epoch is not None and self.iters_per_epoch < 1:
            raise ConfigError("iters_per_epoch must be >= 1", key="iters_per_epoch")
        if self.lr0 < 0:
            raise ConfigError("lr0 must be >= 0", key="lr0")

    @classmethod
    def from_recipe(cls, recipe: str = "synthetic", **overrides) -> "TrainConfig":
        if recipe not in TRAIN_RECIPES:
            raise ConfigError(f"recipe must be one of {sorted(TRAIN_RECIPES)}", key="recipe")
        return cls(recipe=recipe, **{**TRAIN_RECIPES[recipe], **overrides})

    def check_model(self, model: ModelConfig) -> None:
        if model.frame_mode == "valid" and self.subseq_len < model.min_frames:
            raise ConfigError(
                f"subseq_len {self.subseq_len} < {model.min_frames} (P+F+1)", key="subseq_len")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SynthesisConfig:
    n_subframes: int = 8
    crf: str = "gamma"
    gamma: float = 2.2
    stride: Optional[int] = None
    noise_sigma: float = 0.0
    seed: int = 0
    center: str = "floor"

    def __post_init__(self):
        if self.stride is None:
            object.__setattr__(self, "stride", self.n_subframes)
        if self.n_subframes < 1:
            raise ConfigError("n_subframes must be >= 1", key="n_subframes")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1", key="stride")
        if self.crf not in ("identity", "gamma"):
            raise ConfigError("crf must be 'identity' or 'gamma'", key="crf")
        if self.gamma <= 0:
            raise ConfigError("gamma must be > 0", key="gamma")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0", key="noise_sigma")
        if self.center not in ("floor", "ceil"):
            raise ConfigError("center must be 'floor' or 'ceil'", key="center")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


SECTIONS = {"model": ModelConfig, "train": TrainConfig, "synthesis": SynthesisConfig}


@dataclass(frozen=True)
class ResolvedConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)

    def to_dict(self) -> dict:
        return {name: getattr(self, name).to_dict() for name in SECTIONS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _check_type(key: str, value: Any, annotation: Any) -> Any:
    origin = typing.get_origin(annotation)
    if origin is typing.Union:
        args = [a for a in typing.get_args(annotation) if a is not type(None)]
        if value is None:
            return None
        return _check_type(key, value, args[0])
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key} expects a boolean, got {value!r}", key=key)
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} expects an integer, got {value!r}", key=key)
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} expects a number, got {value!r}", key=key)
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key} expects a string, got {value!r}", key=key)
        return value
    return value


def _build_section(name: str, values: dict[str, Any]):
    cls = SECTIONS[name]
    hints = typing.get_type_hints(cls)
    valid = [f.name for f in dataclasses.fields(cls)]
    kwargs = {}
    for key, value in values.items():
        if key not in valid:
            raise ConfigError(
                f"unknown key {name}.{key}; valid keys: {', '.join(valid)}", key=f"{name}.{key}")
        kwargs[key] = _check_type(f"{name}.{key}", value, hints[key])
    try:
        if name == "train":
            recipe = kwargs.pop("recipe", "synthetic")
            return TrainConfig.from_recipe(recipe, **kwargs)
        return cls(**kwargs)
    except ConfigError as exc:
        if exc.key and "." not in exc.key:
            exc.key = f"{name}.{exc.key}"
        raise


def parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def split_override(item: str) -> tuple[str, str, str]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form section.key=value", key=item)
    dotted, raw = item.split("=", 1)
    if "." not in dotted:
        raise ConfigError(f"override key {dotted!r} must be section.key", key=dotted)
    section, key = dotted.split(".", 1)
    if section not in SECTIONS:
        raise ConfigError(
            f"unknown section {section!r}; valid sections: {', '.join(SECTIONS)}", key=dotted)
    return section, key, raw


def parse_config(path: str | Path | None = None,
                 overrides: list[str] | tuple[str, ...] = ()) -> ResolvedConfig:
    """Load a config file, apply ``section.key=value`` overrides, validate.

    Overrides win over file values. Raises :class:`ConfigError` naming the
    field on unknown keys, type mismatches and invariant violations.
    """
    raw: dict[str, dict[str, Any]] = {name: {} for name in SECTIONS}
    if path is not None:
        text = Path(path).read_text()
        data = json.loads(text) if text.strip() else {}
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object", key="<root>")
        for section, values in data.items():
            if section not in SECTIONS:
                raise ConfigError(
                    f"unknown section {section!r}; valid sections: {', '.join(SECTIONS)}",
                    key=section)
            if not isinstance(values, dict):
                raise ConfigError(f"section {section!r} must be an object", key=section)
            raw[section].update(values)
    for item in overrides:
        section, key, value = split_override(item)
        raw[section][key] = parse_value(value)
    return ResolvedConfig(**{name: _build_section(name, raw[name]) for name in SECTIONS})


def load_resolved(data: dict) -> ResolvedConfig:
    return ResolvedConfig(**{name: _build_section(name, data.get(name, {})) for name in SECTIONS})
