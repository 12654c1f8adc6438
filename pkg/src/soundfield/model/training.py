"""Training loop: decoupled-weight-decay adaptive moments with cosine
learning-rate annealing, deterministic shuffling, per-epoch history."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Rng
from .losses import total_loss
from .network import MultitaskNet, input_scale


@dataclass
class TrainConfig:
    lam: float = 10.0            # denoise/seg loss weight
    alpha: float = 0.5           # BCE vs Dice balance
    lr: float = 1e-3
    lr_floor: float = 1e-7
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.9
    adam_eps: float = 1e-8
    batch_size: int = 16
    epochs: int = 20
    peak: float = 1.0
    seg_threshold: float = 0.5
    base_width: int = 16
    # Scale each input by its RMS before the network and scale the denoised
    # output back; evens out the large per-scene power spread.
    normalize_inputs: bool = True

    # Supplement presets: lam matched to the denoising-loss scale.
    LAM_PRESETS = {"n_psnr": 10.0, "mse": 0.001, "l1": 0.01}

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")


def cosine_lr(step, total_steps, lr0, floor):
    """lr(0) = lr0 and lr(total_steps) = floor exactly."""
    if total_steps <= 0:
        return floor
    t = min(max(step, 0), total_steps)
    return floor + 0.5 * (lr0 - floor) * (1.0 + math.cos(math.pi * t / total_steps))


class AdamW:
    """Decoupled weight decay; moments keyed by parameter name."""

    def __init__(self, params, cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, lr):
        cfg = self.cfg
        self.t += 1
        bc1 = 1.0 - cfg.beta1**self.t
        bc2 = 1.0 - cfg.beta2**self.t
        for k, p in params.items():
            g = grads[k]
            m = self.m[k]
            v = self.v[k]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            p -= lr * ((m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps) + cfg.weight_decay * p)


def _stack_dataset(pairs):
    x = np.stack([np.stack([p.noisy.re, p.noisy.im]) for p in pairs])
    y = np.stack([np.stack([p.clean.re, p.clean.im]) for p in pairs])
    m = np.stack([p.mask.labels[None].astype(np.float64) for p in pairs])
    return x, y, m


class TrainingDiverged(RuntimeError):
    pass


def train(dataset, cfg: TrainConfig, rng: Rng, val_dataset=None, net=None,
          start_step=0, epoch_hook=None):
    """Train a MultitaskNet; returns (net, history).

    ``dataset``/``val_dataset`` are sequences of SamplePair.  ``net`` and
    ``start_step`` support resuming: the cosine schedule continues from the
    saved step.  ``epoch_hook(epoch, net, history_row) -> bool`` may stop
    training early by returning True.
    """
    pairs = list(dataset)
    if not pairs:
        raise ValueError("dataset is empty")
    x, y, m = _stack_dataset(pairs)
    val = _stack_dataset(list(val_dataset)) if val_dataset else None

    if net is None:
        net = MultitaskNet(rng.split("init"), base_width=cfg.base_width,
                           normalize_inputs=cfg.normalize_inputs)
    if net.normalize_inputs:
        # Train in normalized units; validation rescales back (see
        # evaluate_arrays).  The denoising loss is scale-sensitive, so the
        # target must share the input's scale.
        s = input_scale(x)
        x = x / s
        y = y / s
    opt = AdamW(net.params(), cfg)
    shuffle_gen = rng.split("shuffle").generator()

    n = len(pairs)
    steps_per_epoch = math.ceil(n / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch + start_step
    history = []
    step = start_step
    for epoch in range(cfg.epochs):
        order = shuffle_gen.permutation(n)
        sums = {"total": 0.0, "denoise": 0.0, "seg": 0.0}
        lr = cfg.lr
        for b in range(steps_per_epoch):
            idx = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            pred, prob = net.forward(x[idx])
            loss, d_pred, d_prob, comps = total_loss(
                pred, y[idx], prob, m[idx], lam=cfg.lam, alpha=cfg.alpha, peak=cfg.peak)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at step {step}, lr={lr:.3e}")
            net.zero_grads()
            net.backward(d_pred, d_prob)
            lr = cosine_lr(step, total_steps, cfg.lr, cfg.lr_floor)
            opt.step(net.params(), net.grads(), lr)
            step += 1
            sums["total"] += loss
            sums["denoise"] += comps["denoise"]
            sums["seg"] += comps["seg"]
        row = {
            "epoch": epoch,
            "lr": lr,
            "loss_total": sums["total"] / steps_per_epoch,
            "loss_denoise": sums["denoise"] / steps_per_epoch,
            "loss_seg": sums["seg"] / steps_per_epoch,
            "step": step,
        }
        if val is not None:
            row.update(evaluate_arrays(net, *val, cfg))
        history.append(row)
        if epoch_hook is not None and epoch_hook(epoch, net, row):
            break
    return net, history


def evaluate_arrays(net, x, y, m, cfg: TrainConfig, batch=16):
    """Validation PSNR (denoised, original units) and IoU over stacked arrays."""
    from ..metrics import iou as iou_fn
    from ..metrics import psnr as psnr_fn

    psnrs = []
    ious = []
    for i in range(0, len(x), batch):
        xb = x[i:i + batch]
        if net.normalize_inputs:
            s = input_scale(xb)
            pred, prob = net.forward(xb / s)
            pred = pred * s
        else:
            pred, prob = net.forward(xb)
        for j in range(len(pred)):
            psnrs.append(psnr_fn(pred[j], y[i + j], cfg.peak))
            ious.append(iou_fn((prob[j, 0] > cfg.seg_threshold).astype(np.uint8),
                               m[i + j, 0].astype(np.uint8)))
    return {"val_psnr_db": float(np.mean(psnrs)), "val_iou": float(np.mean(ious))}
