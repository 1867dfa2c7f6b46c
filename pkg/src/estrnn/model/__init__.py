from .blocks import RDB, DownsampleEmbed, HiddenUpdate, RDBCell, RDBStack, ResBlock
from .fusion import ConcatFusion, GAPFusion, GSAFusion, NoFusion, make_fusion
from .network import ESTRNN, Reconstructor, forward_sequence, init_params
from .ops import (concat_fuse, downsample_embed, gap_fusion, gsa_fuse, rdb_forward,
                  rdb_stack_fuse, reconstruct, update_hidden)
from .paramset import ParamSet, load_model, save_model

__all__ = [
    "RDB", "ResBlock", "DownsampleEmbed", "RDBStack", "HiddenUpdate", "RDBCell",
    "GAPFusion", "GSAFusion", "ConcatFusion", "NoFusion", "make_fusion",
    "ESTRNN", "Reconstructor", "forward_sequence", "init_params",
    "downsample_embed", "rdb_forward", "rdb_stack_fuse", "update_hidden",
    "gap_fusion", "gsa_fuse", "concat_fuse", "reconstruct",
    "ParamSet", "save_model", "load_model",
]
