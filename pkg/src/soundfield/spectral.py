"""Per-pixel temporal Fourier plumbing between videos and per-bin images.

Convention (recorded in file metadata): forward transform is
``X[k] = sum_t x[t] * exp(-2j*pi*k*t/T)`` with no normalization; the inverse
carries the ``1/T`` factor.  Only non-negative bins are stored since inputs
are real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FieldVideo, SpectralImage

FT_CONVENTION = "X[k] = sum_t x[t] exp(-2j pi k t / T); inverse carries 1/T"


@dataclass(frozen=True)
class SpectralVideo:
    """All non-negative frequency bins of a real video of length T.

    ``bins`` is a complex array of shape (W, H, F) with F = T//2 + 1;
    bin k sits at frequency ``k * fs / T``.
    """

    bins: np.ndarray
    num_frames: int
    fs: float

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        object.__setattr__(self, "bins", bins)
        if bins.ndim != 3:
            raise ValueError("bins must be (W, H, F)")
        if bins.shape[2] != self.num_frames // 2 + 1:
            raise ValueError(
                f"bin count {bins.shape[2]} inconsistent with T={self.num_frames}"
            )
        if self.fs <= 0:
            raise ValueError("fs must be positive")

    @property
    def num_bins(self):
        return self.bins.shape[2]

    def bin_freq(self, k):
        return k * self.fs / self.num_frames

    def image(self, k):
        """The k-th bin as a SpectralImage."""
        b = self.bins[:, :, k]
        return SpectralImage(re=b.real.copy(), im=b.imag.copy(), freq_hz=self.bin_freq(k), bin_index=k)

    def nearest_bin(self, freq_hz):
        k = int(round(freq_hz * self.num_frames / self.fs))
        return min(max(k, 0), self.num_bins - 1)


def forward_ft(video: FieldVideo) -> SpectralVideo:
    """Per-pixel 1D DFT along time, exploiting real-input symmetry."""
    if video.num_frames < 2:
        raise ValueError("need at least 2 frames")
    bins = np.fft.rfft(video.data, axis=2)
    return SpectralVideo(bins=bins, num_frames=video.num_frames, fs=video.fs)


def inverse_ft(spec: SpectralVideo, dx: float = 1.0) -> FieldVideo:
    """Exact real-valued inverse of :func:`forward_ft`."""
    data = np.fft.irfft(spec.bins, n=spec.num_frames, axis=2)
    return FieldVideo(data=data, dx=dx, fs=spec.fs)


def dominant_bin(spec: SpectralVideo) -> int:
    """Index of the strongest non-DC bin: argmax over k >= 1 of sum_pixels |X_k|^2.

    Ties break toward the lower index (numpy argmax returns the first max).
    """
    if spec.num_bins < 2:
        raise ValueError("need at least 2 bins")
    power = np.sum(np.abs(spec.bins) ** 2, axis=(0, 1))
    return int(np.argmax(power[1:])) + 1
