"""Named weight registry and its on-disk container.

Container layout (all integers little-endian)::

    offset 0   8 bytes   magic b"ESTRNNPS"
    offset 8   uint32    format_version (currently 1)
    offset 12  uint64    header length L in bytes
    offset 20  L bytes   UTF-8 JSON header
    offset 20+L          payload

The header is ``{"model_config": {...}, "tensors": [{"name", "shape",
"offset", "nbytes"}, ...]}`` with tensors in registry order; ``offset`` is
relative to the payload start and each payload is a C-order little-endian
float32 array.
"""

from __future__ import annotations

import json
import struct
from collections import OrderedDict
from collections.abc import Iterator, Mapping
from pathlib import Path

import numpy as np
import torch

from ..config import ModelConfig
from ..errors import EstrnnError

MAGIC = b"ESTRNNPS"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<f4")


class ParamSet(Mapping):
    """Ordered ``name -> float32 array`` map (names are module paths)."""

    def __init__(self, arrays: Mapping[str, np.ndarray] | None = None):
        self._arrays: OrderedDict[str, np.ndarray] = OrderedDict()
        for name, arr in (arrays or {}).items():
            self._arrays[name] = np.ascontiguousarray(arr, dtype=_DTYPE)

    @classmethod
    def from_module(cls, module: torch.nn.Module) -> "ParamSet":
        return cls(OrderedDict(
            (name, t.detach().cpu().numpy()) for name, t in module.state_dict().items()
        ))

    def load_into(self, module: torch.nn.Module) -> torch.nn.Module:
        ref = module.state_dict()
        state = {}
        for name, t in ref.items():
            state[name] = torch.from_numpy(self._arrays[name].copy()).to(t.dtype)
        missing = set(self._arrays) - set(ref)
        if missing:
            raise EstrnnError(f"unexpected parameters: {sorted(missing)[:5]}")
        module.load_state_dict(state)
        return module

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def n_params(self) -> int:
        return sum(a.size for a in self._arrays.values())

    def to_bytes(self, config: ModelConfig) -> bytes:
        tensors, offset = [], 0
        for name, arr in self._arrays.items():
            tensors.append({"name": name, "shape": list(arr.shape), "offset": offset,
                            "nbytes": arr.nbytes})
            offset += arr.nbytes
        header = json.dumps({"model_config": config.to_dict(), "tensors": tensors},
                            sort_keys=True).encode()
        parts = [MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(header)), header]
        parts += [arr.astype(_DTYPE, copy=False).tobytes() for arr in self._arrays.values()]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> tuple["ParamSet", ModelConfig]:
        if blob[:8] != MAGIC:
            raise EstrnnError("not a parameter file (bad magic)")
        version, hlen = struct.unpack_from("<IQ", blob, 8)
        if version != FORMAT_VERSION:
            raise EstrnnError(f"unsupported parameter file version {version}")
        header = json.loads(blob[20:20 + hlen])
        base = 20 + hlen
        arrays = OrderedDict()
        for rec in header["tensors"]:
            start = base + rec["offset"]
            flat = np.frombuffer(blob, dtype=_DTYPE, count=rec["nbytes"] // 4, offset=start)
            arrays[rec["name"]] = flat.reshape(rec["shape"]).copy()
        return cls(arrays), ModelConfig(**header["model_config"])

    def save(self, path: str | Path, config: ModelConfig) -> None:
        Path(path).write_bytes(self.to_bytes(config))

    @classmethod
    def load(cls, path: str | Path) -> tuple["ParamSet", ModelConfig]:
        return cls.from_bytes(Path(path).read_bytes())

    def equal(self, other: "ParamSet") -> bool:
        return list(self) == list(other) and all(
            self[k].shape == other[k].shape and self[k].tobytes() == other[k].tobytes()
            for k in self)


def save_model(model, path: str | Path) -> None:
    ParamSet.from_module(model).save(path, model.cfg)


def load_model(path: str | Path):
    from .network import ESTRNN

    params, cfg = ParamSet.load(path)
    model = ESTRNN(cfg, seed=None)
    params.load_into(model)
    return model.eval()
