"""Two-regime noise synthesis for spectral images.

Sound-region pixels get circularly symmetric complex white (Gaussian) noise;
silhouette-region pixels get draws from an empirical PDF (Gaussian-kernel
density estimate inverted by transform sampling).  Both SNRs are referenced
to the clean signal power of the sound region, since clean silhouette pixels
are zero by construction.

The authoritative silhouette-noise samples come from optical measurements
that are not shipped; ``synthetic_silhouette_samples`` provides a clearly
non-authoritative heavier-tailed stand-in so the KDE/inverse-sampling path
stays fully exercised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .core import Rng, SilhouetteMask, SpectralImage

SUPPORT_POINTS = 4096


@dataclass(frozen=True)
class EmpiricalPdf:
    """Tabulated density on a uniform support grid with its CDF.

    The support spans the sample range padded by 3 bandwidths; the density is
    renormalized so its trapezoidal integral is exactly 1.
    """

    support: np.ndarray
    density: np.ndarray
    bandwidth: float
    cdf: np.ndarray

    def __post_init__(self):
        for name in ("support", "density", "cdf"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if not (self.support.shape == self.density.shape == self.cdf.shape):
            raise ValueError("support, density, cdf must share one shape")
        if np.any(self.density < 0):
            raise ValueError("density must be non-negative")
        if np.any(np.diff(self.cdf) < 0):
            raise ValueError("cdf must be non-decreasing")

    def integral(self):
        return float(np.trapezoid(self.density, self.support))

    def second_moment(self):
        """E[x^2] under the tabulated density (trapezoidal)."""
        return float(np.trapezoid(self.support**2 * self.density, self.support))

    def to_json(self):
        return {
            "support_min": float(self.support[0]),
            "support_max": float(self.support[-1]),
            "bandwidth": self.bandwidth,
            "density": self.density.tolist(),
        }


def silverman_bandwidth(samples):
    """h = 0.9 * min(sigma, IQR/1.34) * n^(-1/5)."""
    samples = np.asarray(samples, dtype=np.float64)
    sigma = samples.std()
    q75, q25 = np.percentile(samples, [75, 25])
    iqr = q75 - q25
    spread = min(sigma, iqr / 1.34) if iqr > 0 else sigma
    return 0.9 * spread * len(samples) ** (-0.2)


def fit_kde(samples, bandwidth=None, support_points=SUPPORT_POINTS) -> EmpiricalPdf:
    """Gaussian-kernel density on a uniform support grid.

    Uses the binned-KDE approximation (histogram + Gaussian smoothing); with
    thousands of support points the binning error is far below the sampling
    noise of any realistic fit.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if len(samples) < 100:
        raise ValueError("need at least 100 samples")
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples must be finite")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(samples)
    if bandwidth <= 0:
        raise ValueError("degenerate samples: zero bandwidth")
    lo = samples.min() - 3.0 * bandwidth
    hi = samples.max() + 3.0 * bandwidth
    support = np.linspace(lo, hi, support_points)
    step = support[1] - support[0]
    hist, _ = np.histogram(samples, bins=support_points,
                           range=(lo - step / 2, hi + step / 2), density=True)
    density = gaussian_filter1d(hist, sigma=bandwidth / step, mode="constant", truncate=8.0)
    density = np.clip(density, 0.0, None)
    density /= np.trapezoid(density, support)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * step)])
    cdf /= cdf[-1]
    return EmpiricalPdf(support=support, density=density, bandwidth=float(bandwidth), cdf=cdf)


def sample_pdf(pdf: EmpiricalPdf, rng: Rng, n) -> np.ndarray:
    """Inverse transform sampling through the linearly interpolated CDF."""
    u = rng.generator().uniform(size=n)
    return np.interp(u, pdf.cdf, pdf.support)


def synthetic_silhouette_samples(rng: Rng, n=1_000_000) -> np.ndarray:
    """Builtin stand-in noise: two-component Gaussian mixture, heavier-tailed
    than a single Gaussian.  Not calibrated to any measured device."""
    g = rng.generator()
    wide = g.uniform(size=n) < 0.25
    x = g.normal(0.0, 1.0, size=n)
    x[wide] *= 3.5
    return x


@dataclass(frozen=True)
class NoiseConfig:
    """Per-image noise levels in dB (both referenced to sound-region power)."""

    snr_sound_db: float
    snr_sil_db: float

    SNR_RANGE_DB = (-20.0, 20.0)

    @staticmethod
    def sample(rng: Rng):
        g = rng.generator()
        lo, hi = NoiseConfig.SNR_RANGE_DB
        return NoiseConfig(snr_sound_db=float(g.uniform(lo, hi)),
                           snr_sil_db=float(g.uniform(lo, hi)))


def add_noise(clean: SpectralImage, mask: SilhouetteMask, cfg: NoiseConfig,
              rng: Rng, pdf: EmpiricalPdf) -> SpectralImage:
    """Return a noisy copy of ``clean``; the input is never modified.

    Sound region (mask = 0): i.i.d. Gaussian on re and im with total complex
    power P_s * 10^(-snr_sound/10), P_s = mean |clean|^2 over the sound
    region.  Silhouette region (mask = 1): re and im drawn independently from
    ``pdf``, scaled to power P_s * 10^(-snr_sil/10).
    """
    sound = ~mask.labels.astype(bool)
    if clean.shape != mask.shape:
        raise ValueError("clean and mask shapes differ")
    if np.any(np.abs(clean.re[~sound]) > 0) or np.any(np.abs(clean.im[~sound]) > 0):
        raise ValueError("clean silhouette pixels must be exactly zero")
    p_signal = float(np.mean(clean.re[sound] ** 2 + clean.im[sound] ** 2)) if sound.any() else 0.0
    if p_signal == 0.0:
        raise ValueError("clean sound region is identically zero: SNR undefined")

    re = clean.re.copy()
    im = clean.im.copy()

    g_sound = rng.split("sound").generator()
    p_noise = p_signal * 10.0 ** (-cfg.snr_sound_db / 10.0)
    sigma = np.sqrt(p_noise / 2.0)
    n_sound = int(sound.sum())
    if n_sound:
        re[sound] += sigma * g_sound.normal(size=n_sound)
        im[sound] += sigma * g_sound.normal(size=n_sound)

    sil = ~sound
    n_sil = int(sil.sum())
    if n_sil:
        p_sil = p_signal * 10.0 ** (-cfg.snr_sil_db / 10.0)
        m2 = pdf.second_moment()
        scale = np.sqrt(p_sil / (2.0 * m2))
        sil_rng = rng.split("silhouette")
        draws = sample_pdf(pdf, sil_rng, 2 * n_sil) * scale
        re[sil] = draws[:n_sil]
        im[sil] = draws[n_sil:]
    return SpectralImage(re=re, im=im, freq_hz=clean.freq_hz, bin_index=clean.bin_index)
