"""Applying a trained network to spectral images and raw field videos."""

from __future__ import annotations

import numpy as np

from ..core import SilhouetteMask, SpectralImage
from ..spectral import dominant_bin, forward_ft, inverse_ft
from .network import input_scale


def _forward(net, x):
    """Forward pass honoring the network's input-normalization contract."""
    if net.normalize_inputs:
        s = input_scale(x)
        denoised, prob = net.forward(x / s)
        return denoised * s, prob
    return net.forward(x)


def infer_image(net, image: SpectralImage, threshold=0.5):
    """Denoise one spectral image and segment its silhouette.

    Returns (SpectralImage, SilhouetteMask).  Pixels with probability
    strictly above ``threshold`` are labeled 1.
    """
    x = np.stack([image.re, image.im])[None]
    denoised, prob = _forward(net, x)
    out = SpectralImage(re=denoised[0, 0], im=denoised[0, 1],
                        freq_hz=image.freq_hz, bin_index=image.bin_index)
    mask = SilhouetteMask(labels=(prob[0, 0] > threshold).astype(np.uint8))
    return out, mask


def infer_video(net, video, threshold=0.5, batch=16):
    """Denoise a field video bin-by-bin in the frequency domain.

    Every positive-frequency bin is passed through the network (batched),
    the result is inverse-transformed back to a time-domain video, and the
    segmentation mask is taken at the dominant bin.

    Returns (FieldVideo, SilhouetteMask, dominant_bin_index).
    """
    sv = forward_ft(video)
    k_dom = dominant_bin(sv)
    nbins = sv.bins.shape[2]
    x = np.empty((nbins, 2) + sv.bins.shape[:2])
    x[:, 0] = np.moveaxis(sv.bins.real, 2, 0)
    x[:, 1] = np.moveaxis(sv.bins.imag, 2, 0)

    out_bins = np.empty_like(sv.bins)
    mask = None
    for i in range(0, nbins, batch):
        denoised, prob = _forward(net, x[i:i + batch])
        out_bins[:, :, i:i + batch] = np.moveaxis(
            denoised[:, 0] + 1j * denoised[:, 1], 0, 2)
        if i <= k_dom < i + batch:
            labels = (prob[k_dom - i, 0] > threshold).astype(np.uint8)
            mask = SilhouetteMask(labels=labels)

    clean_sv = type(sv)(bins=out_bins, num_frames=sv.num_frames, fs=sv.fs)
    return inverse_ft(clean_sv, video.dx), mask, k_dom
