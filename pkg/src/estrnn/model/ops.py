"""Per-frame functional entry points over unbatched ``[C, H, W]`` tensors.

Each function takes the module holding the relevant parameters, so a
single trained :class:`~estrnn.model.network.ESTRNN` can be probed one stage
at a time, e.g. ``rdb_forward(x, model.cell.stack.blocks[3])``.
"""

from __future__ import annotations

import torch

from ..errors import ShapeError


def _batched(x: torch.Tensor, what: str) -> torch.Tensor:
    if x.dim() != 3:
        raise ShapeError(f"{what} must be [C, H, W], got {list(x.shape)}")
    return x.unsqueeze(0)


def downsample_embed(frame, prev_hidden, downsample) -> torch.Tensor:
    return downsample(_batched(frame, "frame"), _batched(prev_hidden, "hidden"))[0]


def rdb_forward(x, block) -> torch.Tensor:
    return block(_batched(x, "feature map"))[0]


def rdb_stack_fuse(f_d, stack) -> tuple[torch.Tensor, list[torch.Tensor]]:
    f_t, f_r = stack(_batched(f_d, "f_D"))
    return f_t[0], [r[0] for r in f_r]


def update_hidden(f_t, hidden_update) -> torch.Tensor:
    return hidden_update(_batched(f_t, "f_t"))[0]


def gap_fusion(f_t, f_neighbor, branch) -> torch.Tensor:
    return branch(_batched(f_t, "f_t"), _batched(f_neighbor, "neighbor"))[0]


def gsa_fuse(f_t, neighbors, fusion) -> torch.Tensor:
    return fusion(_batched(f_t, "f_t"), [_batched(n, "neighbor") for n in neighbors])[0]


concat_fuse = gsa_fuse


def reconstruct(fused, recon) -> torch.Tensor:
    return recon(_batched(fused, "F_t"))[0]
