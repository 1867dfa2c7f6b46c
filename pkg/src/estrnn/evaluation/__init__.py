from .cost import CostReport, LayerCost, count_params, macs_conv_layer, macs_model
from .metrics import psnr, psnr_video, ssim

__all__ = ["CostReport", "LayerCost", "count_params", "macs_conv_layer", "macs_model",
           "psnr", "psnr_video", "ssim"]
