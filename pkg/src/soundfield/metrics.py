"""Evaluation metrics (PSNR, SSIM, class-1 IoU) and dataset-level reports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve

from .core import SamplePair, SilhouetteMask, SpectralImage

PSNR_CAP_DB = 120.0
DEFAULT_PEAK = 1.0


def psnr(pred, target, peak=DEFAULT_PEAK):
    """10*log10(peak^2 / MSE) in dB, MSE over all channels jointly.

    Capped at 120 dB (the exact-equality sentinel).
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError("shape mismatch")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((pred - target) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(peak**2 / mse), PSNR_CAP_DB)


def _gaussian_window(size=11, sigma=1.5):
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_single(x, y, peak, size, sigma, k1, k2):
    if min(x.shape) < size:
        raise ValueError(f"image smaller than the {size}x{size} SSIM window")
    w = _gaussian_window(size, sigma)
    half = size // 2
    L = 2.0 * peak
    c1 = (k1 * L) ** 2
    c2 = (k2 * L) ** 2

    def smooth(a):
        return convolve(a, w, mode="constant")[half:-half, half:-half]

    mx = smooth(x)
    my = smooth(y)
    mxx = smooth(x * x)
    myy = smooth(y * y)
    mxy = smooth(x * y)
    vx = mxx - mx * mx
    vy = myy - my * my
    cov = mxy - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def ssim(pred, target, peak=DEFAULT_PEAK, window_size=11, sigma=1.5, k1=0.01, k2=0.03):
    """Mean local SSIM with an 11x11 Gaussian window, dynamic range 2*peak.

    2D inputs are scored directly; 3D (C, W, H) inputs are scored per channel
    and averaged.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError("shape mismatch")
    if pred.ndim == 2:
        pred, target = pred[None], target[None]
    return float(np.mean([
        _ssim_single(pred[c], target[c], peak, window_size, sigma, k1, k2)
        for c in range(pred.shape[0])
    ]))


def iou(pred_mask, gt_mask, class_id=1):
    """Intersection over union for one class; 1.0 when both masks lack it."""
    pred = np.asarray(pred_mask.labels if isinstance(pred_mask, SilhouetteMask) else pred_mask)
    gt = np.asarray(gt_mask.labels if isinstance(gt_mask, SilhouetteMask) else gt_mask)
    if pred.shape != gt.shape:
        raise ValueError("shape mismatch")
    p = pred == class_id
    g = gt == class_id
    union = np.logical_or(p, g).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, g).sum() / union)


def input_snr_db(noisy: SpectralImage, clean: SpectralImage, mask: SilhouetteMask):
    """Measured sound-region SNR of a noisy sample in dB."""
    sound = ~mask.labels.astype(bool)
    p_sig = np.mean(clean.re[sound] ** 2 + clean.im[sound] ** 2)
    p_noise = np.mean((noisy.re[sound] - clean.re[sound]) ** 2
                      + (noisy.im[sound] - clean.im[sound]) ** 2)
    if p_noise == 0:
        return float("inf")
    return float(10.0 * np.log10(p_sig / p_noise))


@dataclass
class EvalReport:
    """Per-sample metric records plus dataset aggregates."""

    records: list = field(default_factory=list)
    peak: float = DEFAULT_PEAK

    def add(self, **rec):
        if "ssim" in rec and not -1.0 <= rec["ssim"] <= 1.0:
            raise ValueError("ssim out of [-1, 1]")
        if "iou" in rec and rec["iou"] is not None and not 0.0 <= rec["iou"] <= 1.0:
            raise ValueError("iou out of [0, 1]")
        self.records.append(rec)

    def _mean(self, key):
        vals = [r[key] for r in self.records if r.get(key) is not None]
        return float(np.mean(vals)) if vals else None

    def summary(self):
        return {
            "psnr_db": self._mean("psnr_db"),
            "ssim": self._mean("ssim"),
            "iou": self._mean("iou"),
            "n": len(self.records),
        }

    def write_csv(self, path):
        keys = ["index", "psnr_db", "ssim", "iou", "input_snr_db", "silhouette_area_frac"]
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=keys)
            w.writeheader()
            for r in self.records:
                w.writerow({k: r.get(k) for k in keys})

    def write_json(self, path):
        with open(path, "w") as f:
            json.dump(self.summary(), f, indent=2)
            f.write("\n")

    def write_scatter(self, dir_path):
        """Fig.-style scatter data: input SNR vs PSNR, silhouette area % vs IoU."""
        from pathlib import Path

        dir_path = Path(dir_path)
        with open(dir_path / "snr_vs_psnr.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["input_snr_db", "psnr_db"])
            for r in self.records:
                w.writerow([r.get("input_snr_db"), r.get("psnr_db")])
        with open(dir_path / "area_vs_iou.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["silhouette_area_pct", "iou"])
            for r in self.records:
                frac = r.get("silhouette_area_frac")
                w.writerow([None if frac is None else 100.0 * frac, r.get("iou")])


def evaluate_dataset(transform, dataset, peak=DEFAULT_PEAK) -> EvalReport:
    """Score a denoiser/segmenter over SamplePairs.

    ``transform(pair) -> (SpectralImage, SilhouetteMask | None)`` is the
    shared contract for networks and classical filters; a None mask skips the
    IoU column for that sample.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("empty dataset")
    report = EvalReport(peak=peak)
    for idx, pair in enumerate(dataset):
        denoised, pred_mask = transform(pair)
        pred = np.stack([denoised.re, denoised.im])
        target = np.stack([pair.clean.re, pair.clean.im])
        report.add(
            index=idx,
            psnr_db=psnr(pred, target, peak),
            ssim=ssim(pred, target, peak),
            iou=None if pred_mask is None else iou(pred_mask, pair.mask),
            input_snr_db=input_snr_db(pair.noisy, pair.clean, pair.mask),
            silhouette_area_frac=pair.mask.area_fraction(),
        )
    return report
