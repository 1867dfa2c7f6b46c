"""PNG frame I/O and the on-disk dataset layout.

Layout::

    <root>/manifest.json
    <root>/<split>/<seq_name>/blur/00000000.png
    <root>/<split>/<seq_name>/sharp/00000000.png
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EstrnnError

BLUR_DIR = "blur"
SHARP_DIR = "sharp"
FRAME_FMT = "{:08d}.png"


def read_png(path: str | Path) -> np.ndarray:
    """Read an 8-bit image as float32 ``[3, H, W]`` in [0, 1]."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return arr.transpose(2, 0, 1).copy()


def write_png(path: str | Path, frame) -> None:
    arr = np.asarray(frame, dtype=np.float64)
    arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8).transpose(1, 2, 0)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="RGB").save(path)


def list_frames(directory: str | Path) -> list[Path]:
    return sorted(p for p in Path(directory).iterdir()
                  if p.suffix.lower() in (".png", ".jpg", ".jpeg"))


def read_frames(directory: str | Path) -> np.ndarray:
    paths = list_frames(directory)
    if not paths:
        raise FileNotFoundError(f"no image frames in {directory}")
    return np.stack([read_png(p) for p in paths])


def write_frames(directory: str | Path, frames, start: int = 0) -> None:
    for i, frame in enumerate(frames):
        write_png(Path(directory) / FRAME_FMT.format(start + i), frame)


@dataclass
class SequenceEntry:
    name: str
    split: str
    n_frames: int


@dataclass
class DatasetManifest:
    resolution: tuple[int, int]  # (width, height)
    sequences: list[SequenceEntry] = field(default_factory=list)
    synthesis: dict = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)
    blur_dir: str = BLUR_DIR
    sharp_dir: str = SHARP_DIR

    def to_dict(self) -> dict:
        d = asdict(self)
        d["resolution"] = list(self.resolution)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(resolution=tuple(d["resolution"]),
                   sequences=[SequenceEntry(**s) for s in d["sequences"]],
                   synthesis=d.get("synthesis", {}), skipped=d.get("skipped", []),
                   blur_dir=d.get("blur_dir", BLUR_DIR), sharp_dir=d.get("sharp_dir", SHARP_DIR))

    def save(self, root: str | Path) -> None:
        Path(root, "manifest.json").write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, root: str | Path) -> "DatasetManifest":
        path = Path(root, "manifest.json")
        if not path.exists():
            raise FileNotFoundError(f"missing manifest: {path}")
        return cls.from_dict(json.loads(path.read_text()))

    def splits(self) -> list[str]:
        return sorted({s.split for s in self.sequences})

    def validate(self, root: str | Path) -> None:
        """Check that every listed pair exists on disk and counts agree."""
        for seq in self.sequences:
            base = Path(root, seq.split, seq.name)
            blur = list_frames(base / self.blur_dir)
            sharp = list_frames(base / self.sharp_dir)
            expected = [FRAME_FMT.format(i) for i in range(seq.n_frames)]
            if [p.name for p in blur] != expected or [p.name for p in sharp] != expected:
                raise EstrnnError(
                    f"sequence {seq.split}/{seq.name}: expected {seq.n_frames} aligned pairs, "
                    f"found {len(blur)} blur / {len(sharp)} sharp")


@dataclass
class SequencePair:
    name: str
    blur: np.ndarray   # [T, 3, H, W] float32
    sharp: np.ndarray

    def __post_init__(self):
        if self.blur.shape != self.sharp.shape:
            raise EstrnnError(f"{self.name}: blur {self.blur.shape} != sharp {self.sharp.shape}")


def load_split(root: str | Path, split: str) -> list[SequencePair]:
    manifest = DatasetManifest.load(root)
    seqs = [s for s in manifest.sequences if s.split == split]
    if not seqs:
        raise FileNotFoundError(f"split {split!r} not present in {root}")
    return [SequencePair(s.name,
                         read_frames(Path(root, split, s.name, manifest.blur_dir)),
                         read_frames(Path(root, split, s.name, manifest.sharp_dir)))
            for s in seqs]
