"""Composite training loss: negative-PSNR denoising + weighted BCE/Dice
segmentation.  Every loss returns (value, gradient) so the training loop and
the finite-difference oracle share one code path."""

from __future__ import annotations

import numpy as np

MSE_FLOOR = 1e-12
LOG10 = np.log(10.0)


def loss_denoise(pred, target, peak=1.0):
    """Batch-mean negative PSNR: -10*log10(peak^2 / MSE_i) per sample.

    MSE is floored at 1e-12 inside the log to stay finite on perfect
    batches (the floor region contributes zero gradient).
    """
    if pred.shape != target.shape:
        raise ValueError("shape mismatch")
    if peak <= 0:
        raise ValueError("peak must be positive")
    n = pred.shape[0]
    per_el = pred[0].size
    diff = pred - target
    mse = np.mean(diff.reshape(n, -1) ** 2, axis=1)
    mse_f = np.maximum(mse, MSE_FLOOR)
    value = float(np.mean(-10.0 * np.log10(peak**2 / mse_f)))
    coef = np.where(mse > MSE_FLOOR, 10.0 / (LOG10 * mse_f), 0.0)
    grad = (coef / (n * per_el))[:, None] * (2.0 * diff.reshape(n, -1))
    return value, grad.reshape(pred.shape)


def loss_seg(prob, labels, alpha=0.5, eps=1.0):
    """(1-alpha)*BCE + alpha*SoftDice over all pixels of the batch.

    SoftDice = 1 - (2*sum(p*y) + eps) / (sum(p) + sum(y) + eps).
    Returns the gradient w.r.t. the probabilities.
    """
    if prob.shape != labels.shape:
        raise ValueError("shape mismatch")
    y = np.asarray(labels, dtype=np.float64)
    p = np.clip(prob, 1e-12, 1.0 - 1e-12)
    n = p.size

    bce = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    d_bce = (-y / p + (1.0 - y) / (1.0 - p)) / n

    inter = float(np.sum(p * y))
    total = float(np.sum(p) + np.sum(y))
    dice = 1.0 - (2.0 * inter + eps) / (total + eps)
    d_dice = -(2.0 * y * (total + eps) - (2.0 * inter + eps)) / (total + eps) ** 2

    value = (1.0 - alpha) * bce + alpha * dice
    grad = (1.0 - alpha) * d_bce + alpha * d_dice
    return value, grad


def total_loss(pred, target, prob, labels, lam=10.0, alpha=0.5, peak=1.0):
    """loss_denoise + lam * loss_seg.

    Returns (value, d_pred, d_prob, components) with components
    {"denoise": ..., "seg": ...}; d_prob already carries the lam factor.
    """
    ld, d_pred = loss_denoise(pred, target, peak)
    ls, d_prob = loss_seg(prob, labels, alpha)
    return ld + lam * ls, d_pred, lam * d_prob, {"denoise": ld, "seg": ls}
