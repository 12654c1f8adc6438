"""Classical denoising baselines: per-pixel time bandpass and a
spatio-temporal dispersion-cone filter.

Both are ideal (brick-wall) spectral projections, which makes them linear
and idempotent by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FieldVideo
from .geometry import AIR_SOUND_SPEED


@dataclass(frozen=True)
class FilterSpec:
    """Parameters for the classical filters.

    ``kind`` is "time_bandpass" or "spatiotemporal"; ``delta_k`` is the
    half-thickness of the dispersion cone in rad/m (None: 2 wavenumber bins
    of the video being filtered).
    """

    kind: str
    center_hz: float
    bandwidth_hz: float
    sound_speed: float = AIR_SOUND_SPEED
    delta_k: float | None = None

    def __post_init__(self):
        if self.kind not in ("time_bandpass", "spatiotemporal"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.sound_speed <= 0:
            raise ValueError("sound_speed must be positive")
        if self.delta_k is not None and self.delta_k <= 0:
            raise ValueError("delta_k must be positive")

    def band(self):
        return (self.center_hz - self.bandwidth_hz / 2.0,
                self.center_hz + self.bandwidth_hz / 2.0)

    def check_band(self, fs):
        lo, hi = self.band()
        if lo <= 0 or hi >= fs / 2.0:
            raise ValueError(
                f"band [{lo:.1f}, {hi:.1f}] Hz outside (0, {fs / 2:.1f}) Hz"
            )


def time_bandpass(video: FieldVideo, spec: FilterSpec) -> FieldVideo:
    """Per-pixel DFT, zero every bin outside the band, inverse DFT."""
    spec.check_band(video.fs)
    T = video.num_frames
    freqs = np.fft.rfftfreq(T, d=1.0 / video.fs)
    lo, hi = spec.band()
    keep = (freqs >= lo) & (freqs <= hi)
    bins = np.fft.rfft(video.data, axis=2)
    bins[:, :, ~keep] = 0.0
    return FieldVideo(data=np.fft.irfft(bins, n=T, axis=2), dx=video.dx, fs=video.fs)


def spatiotemporal_filter(video: FieldVideo, spec: FilterSpec) -> FieldVideo:
    """3D DFT; keep (kx, ky, omega) bins on the dispersion cone
    | |k| - |omega|/c | <= delta_k inside the temporal band; inverse DFT."""
    spec.check_band(video.fs)
    w, h, T = video.data.shape
    kx = 2 * math.pi * np.fft.fftfreq(w, d=video.dx)
    ky = 2 * math.pi * np.fft.fftfreq(h, d=video.dx)
    f = np.fft.fftfreq(T, d=1.0 / video.fs)
    kmag = np.sqrt(kx[:, None, None] ** 2 + ky[None, :, None] ** 2)
    lo, hi = spec.band()
    in_band = (np.abs(f) >= lo) & (np.abs(f) <= hi)
    delta_k = spec.delta_k
    if delta_k is None:
        delta_k = 2.0 * 2 * math.pi / (max(w, h) * video.dx)
    cone = np.abs(kmag - 2 * math.pi * np.abs(f)[None, None, :] / spec.sound_speed) <= delta_k
    mask = cone & in_band[None, None, :]
    spec3 = np.fft.fftn(video.data)
    out = np.fft.ifftn(spec3 * mask).real
    return FieldVideo(data=out, dx=video.dx, fs=video.fs)


def apply_filter(video: FieldVideo, spec: FilterSpec) -> FieldVideo:
    if spec.kind == "time_bandpass":
        return time_bandpass(video, spec)
    return spatiotemporal_filter(video, spec)
