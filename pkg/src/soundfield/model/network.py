"""The multitask U-shaped network: 2 input channels, 3 output channels
(denoised re, denoised im, segmentation logit -> sigmoid probability).

Two downsample stages with additive skip connections; widths
(base, 2*base, 4*base).  forward caches activations for the matching
backward call.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..core import Rng, read_tensor, write_tensor
from .layers import AvgPool2, Conv2d, SiLU, Upsample2, sigmoid


def input_scale(x):
    """Per-sample RMS over all channels/pixels, floored to stay invertible.

    Shape (N, ...) in, (N, 1, 1, 1) out.
    """
    x = np.asarray(x, dtype=np.float64)
    s = np.sqrt(np.mean(x.reshape(x.shape[0], -1) ** 2, axis=1))
    return np.maximum(s, 1e-12).reshape(-1, 1, 1, 1)


class MultitaskNet:
    def __init__(self, rng: Rng, base_width=16, in_ch=2, out_ch=3,
                 normalize_inputs=True):
        self.base_width = base_width
        self.in_ch = in_ch
        self.out_ch = out_ch
        # Contract flag: callers divide inputs by their per-sample RMS and
        # multiply the denoised output back (see input_scale).
        self.normalize_inputs = normalize_inputs
        gen = rng.generator()
        b = base_width

        def block(cin, cout, k, name):
            return (Conv2d(cin, cout, k, gen, name), SiLU())

        self.stem = block(in_ch, b, 3, "stem")
        self.enc0 = [block(b, b, 3, "enc0a"), block(b, b, 3, "enc0b")]
        self.pool1 = AvgPool2()
        self.down1 = block(b, 2 * b, 1, "down1")
        self.enc1 = [block(2 * b, 2 * b, 3, "enc1a"), block(2 * b, 2 * b, 3, "enc1b")]
        self.pool2 = AvgPool2()
        self.down2 = block(2 * b, 4 * b, 1, "down2")
        self.mid = [block(4 * b, 4 * b, 3, "mida"), block(4 * b, 4 * b, 3, "midb")]
        self.up1 = Upsample2()
        self.upc1 = block(4 * b, 2 * b, 1, "upc1")
        self.dec1 = [block(2 * b, 2 * b, 3, "dec1a"), block(2 * b, 2 * b, 3, "dec1b")]
        self.up0 = Upsample2()
        self.upc0 = block(2 * b, b, 1, "upc0")
        self.dec0 = [block(b, b, 3, "dec0a"), block(b, b, 3, "dec0b")]
        self.head = Conv2d(b, out_ch, 1, gen, "head")

    # --- parameter plumbing ------------------------------------------------
    def _conv_layers(self):
        for pair in ([self.stem] + self.enc0 + [self.down1] + self.enc1
                     + [self.down2] + self.mid + [self.upc1] + self.dec1
                     + [self.upc0] + self.dec0):
            yield pair[0]
        yield self.head

    def params(self):
        out = {}
        for layer in self._conv_layers():
            out.update(layer.params())
        return out

    def grads(self):
        out = {}
        for layer in self._conv_layers():
            out.update(layer.grads())
        return out

    def zero_grads(self):
        for layer in self._conv_layers():
            layer.zero_grads()

    def num_params(self):
        return sum(p.size for p in self.params().values())

    # --- forward / backward ------------------------------------------------
    @staticmethod
    def _run(pairs, x):
        for conv, act in pairs:
            x = act.forward(conv.forward(x))
        return x

    @staticmethod
    def _run_back(pairs, d):
        for conv, act in reversed(pairs):
            d = conv.backward(act.backward(d))
        return d

    def forward(self, x):
        """x: (N, in_ch, W, H) with W, H divisible by 4.

        Returns (denoised, seg_prob) of shapes (N, 2, W, H), (N, 1, W, H).
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ValueError(f"expected (N, {self.in_ch}, W, H), got {x.shape}")
        if x.shape[2] % 4 or x.shape[3] % 4:
            raise ValueError("spatial dims must be divisible by 4")
        s = self._run([self.stem], x)
        e0 = self._run(self.enc0, s)
        d1 = self._run([self.down1], self.pool1.forward(e0))
        e1 = self._run(self.enc1, d1)
        d2 = self._run([self.down2], self.pool2.forward(e1))
        m = self._run(self.mid, d2)
        u1 = self._run([self.upc1], self.up1.forward(m)) + e1
        r1 = self._run(self.dec1, u1)
        u0 = self._run([self.upc0], self.up0.forward(r1)) + e0
        r0 = self._run(self.dec0, u0)
        out = self.head.forward(r0)
        self._seg_prob = sigmoid(out[:, self.in_ch:, :, :])
        denoised = out[:, :self.in_ch, :, :]
        return denoised, self._seg_prob

    def backward(self, d_denoised, d_seg_prob):
        """Backpropagate output gradients; populates parameter grads.

        ``d_seg_prob`` is the gradient w.r.t. the sigmoid output (the chain
        through the sigmoid happens here).  Returns the input gradient.
        """
        p = self._seg_prob
        d_logit = d_seg_prob * p * (1.0 - p)
        d_out = np.concatenate([d_denoised, d_logit], axis=1)
        d = self.head.backward(d_out)
        d_u0 = self._run_back(self.dec0, d)
        d_e0 = d_u0.copy()
        d = self.up0.backward(self._run_back([self.upc0], d_u0))
        d_u1 = self._run_back(self.dec1, d)
        d_e1 = d_u1.copy()
        d = self.up1.backward(self._run_back([self.upc1], d_u1))
        d = self._run_back(self.mid, d)
        d = self.pool2.backward(self._run_back([self.down2], d))
        d = self._run_back(self.enc1, d + d_e1)
        d = self.pool1.backward(self._run_back([self.down1], d))
        d = self._run_back(self.enc0, d + d_e0)
        return self._run_back([self.stem], d)


def save_checkpoint(net: MultitaskNet, directory, extra=None):
    """Parameter tensors in the container format + a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for name, arr in net.params().items():
        fname = name.replace(".", "_") + ".bin"
        write_tensor(directory / fname, arr)
        names.append([name, fname])
    manifest = {
        "base_width": net.base_width,
        "in_ch": net.in_ch,
        "out_ch": net.out_ch,
        "normalize_inputs": net.normalize_inputs,
        "tensors": names,
        "extra": extra or {},
    }
    with open(directory / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")


def load_checkpoint(directory):
    """Rebuild a MultitaskNet from :func:`save_checkpoint` output."""
    directory = Path(directory)
    with open(directory / "manifest.json") as f:
        manifest = json.load(f)
    net = MultitaskNet(Rng(0), base_width=manifest["base_width"],
                       in_ch=manifest["in_ch"], out_ch=manifest["out_ch"],
                       normalize_inputs=manifest.get("normalize_inputs", True))
    params = net.params()
    for name, fname in manifest["tensors"]:
        arr, _ = read_tensor(directory / fname)
        if params[name].shape != arr.shape:
            raise ValueError(f"checkpoint/layer-spec mismatch for {name}: "
                             f"{arr.shape} vs {params[name].shape}")
        params[name][:] = arr
    return net, manifest["extra"]
