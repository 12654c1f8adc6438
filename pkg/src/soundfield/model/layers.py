"""Network building blocks with hand-written forward/backward passes.

Data layout is (N, C, W, H), float64 throughout.  Each layer caches what its
backward pass needs; backward must follow the forward that produced the
cache.  All activations are smooth (SiLU, sigmoid), which keeps the
finite-difference gradient oracle free of kink artifacts.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    """Base: parameter-free layers override forward/backward only."""

    def params(self):
        return {}

    def grads(self):
        return {}

    def zero_grads(self):
        for g in self.grads().values():
            g[:] = 0.0


class Conv2d(Layer):
    """k x k convolution, stride 1, zero 'same' padding, via im2col."""

    def __init__(self, cin, cout, k, gen, name):
        self.cin, self.cout, self.k = cin, cout, k
        self.name = name
        fan_in = cin * k * k
        self.w = gen.normal(0.0, np.sqrt(2.0 / fan_in), size=(cout, cin, k, k))
        self.b = np.zeros(cout)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._cache = None

    def params(self):
        return {f"{self.name}.w": self.w, f"{self.name}.b": self.b}

    def grads(self):
        return {f"{self.name}.w": self.dw, f"{self.name}.b": self.db}

    def forward(self, x):
        n, c, w, h = x.shape
        k = self.k
        p = k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        win = sliding_window_view(xp, (k, k), axis=(2, 3))        # N,C,W,H,k,k
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * w * h, c * k * k)
        wm = self.w.reshape(self.cout, c * k * k)
        y = cols @ wm.T + self.b
        self._cache = (cols, x.shape)
        return y.reshape(n, w, h, self.cout).transpose(0, 3, 1, 2)

    def backward(self, dy):
        cols, x_shape = self._cache
        n, c, w, h = x_shape
        k = self.k
        p = k // 2
        dyf = dy.transpose(0, 2, 3, 1).reshape(n * w * h, self.cout)
        self.dw += (dyf.T @ cols).reshape(self.w.shape)
        self.db += dyf.sum(axis=0)
        dcols = (dyf @ self.w.reshape(self.cout, c * k * k))
        dcols = dcols.reshape(n, w, h, c, k, k)
        dxp = np.zeros((n, c, w + 2 * p, h + 2 * p))
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + w, j:j + h] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, p:p + w, p:p + h] if p else dxp


class SiLU(Layer):
    """x * sigmoid(x)."""

    def forward(self, x):
        s = 1.0 / (1.0 + np.exp(-x))
        self._cache = (x, s)
        return x * s

    def backward(self, dy):
        x, s = self._cache
        return dy * (s * (1.0 + x * (1.0 - s)))


class AvgPool2(Layer):
    """2x2 mean pooling, stride 2; spatial dims must be even."""

    def forward(self, x):
        n, c, w, h = x.shape
        if w % 2 or h % 2:
            raise ValueError("spatial dims must be even for 2x2 pooling")
        self._shape = x.shape
        return x.reshape(n, c, w // 2, 2, h // 2, 2).mean(axis=(3, 5))

    def backward(self, dy):
        n, c, w, h = self._shape
        return np.repeat(np.repeat(dy, 2, axis=2), 2, axis=3) * 0.25


class Upsample2(Layer):
    """Nearest-neighbor 2x upsampling."""

    def forward(self, x):
        return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)

    def backward(self, dy):
        n, c, w, h = dy.shape
        return dy.reshape(n, c, w // 2, 2, h // 2, 2).sum(axis=(3, 5))


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))
