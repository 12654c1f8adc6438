"""Desk-scale multitask encoder-decoder with manual backpropagation.

The 3-channel head (2 denoise + 1 segmentation), the composite loss, and the
optimizer/scheduler are the pieces under test; the backbone is a compact
U-shaped network (~120k parameters).
"""

from .layers import AvgPool2, Conv2d, SiLU, Upsample2
from .losses import loss_denoise, loss_seg, total_loss
from .network import MultitaskNet, load_checkpoint, save_checkpoint
from .training import TrainConfig, cosine_lr, train
from .inference import infer_image, infer_video

__all__ = [
    "AvgPool2", "Conv2d", "SiLU", "Upsample2",
    "loss_denoise", "loss_seg", "total_loss",
    "MultitaskNet", "save_checkpoint", "load_checkpoint",
    "TrainConfig", "cosine_lr", "train",
    "infer_image", "infer_video",
]
