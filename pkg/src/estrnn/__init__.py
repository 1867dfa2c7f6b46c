"""Efficient spatio-temporal recurrent network for video deblurring."""

from .config import ModelConfig, SynthesisConfig, TrainConfig, parse_config
from .model import ESTRNN, ParamSet, forward_sequence

__version__ = "0.1.0"

__all__ = ["ModelConfig", "TrainConfig", "SynthesisConfig", "parse_config",
           "ESTRNN", "ParamSet", "forward_sequence"]
