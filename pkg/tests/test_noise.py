"""KDE fitting, inverse-transform sampling, and the two-regime noise model."""

import numpy as np
import pytest
from scipy.stats import ks_2samp

from soundfield.core import Rng, SilhouetteMask, SpectralImage
from soundfield.noise import (EmpiricalPdf, NoiseConfig, add_noise, fit_kde,
                              sample_pdf, silverman_bandwidth,
                              synthetic_silhouette_samples)


class TestKde:
    def test_density_integrates_to_one(self):
        samples = Rng(1).generator().normal(size=20_000)
        pdf = fit_kde(samples)
        assert pdf.integral() == pytest.approx(1.0, abs=1e-12)
        assert np.all(pdf.density >= 0)

    def test_standard_normal_density_at_zero(self):
        samples = Rng(2).generator().normal(size=200_000)
        pdf = fit_kde(samples)
        d0 = np.interp(0.0, pdf.support, pdf.density)
        assert d0 == pytest.approx(1.0 / np.sqrt(2 * np.pi), abs=0.01)

    def test_silverman_formula(self):
        samples = Rng(3).generator().normal(size=10_000)
        h = silverman_bandwidth(samples)
        sigma = samples.std()
        q75, q25 = np.percentile(samples, [75, 25])
        expected = 0.9 * min(sigma, (q75 - q25) / 1.34) * len(samples) ** -0.2
        assert h == pytest.approx(expected)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            fit_kde(np.zeros(10) + np.arange(10))

    def test_degenerate_samples(self):
        with pytest.raises(ValueError):
            fit_kde(np.full(1000, 1.5))

    def test_second_moment_of_normal(self):
        pdf = fit_kde(Rng(4).generator().normal(size=500_000))
        # KDE convolution widens variance by h^2
        assert pdf.second_moment() == pytest.approx(1.0 + pdf.bandwidth**2, rel=0.02)

    def test_cdf_monotone(self):
        pdf = fit_kde(Rng(5).generator().normal(size=10_000))
        assert np.all(np.diff(pdf.cdf) >= 0)
        assert pdf.cdf[0] == 0.0 and pdf.cdf[-1] == pytest.approx(1.0)

    def test_validation(self):
        s = np.linspace(-1, 1, 8)
        with pytest.raises(ValueError):
            EmpiricalPdf(support=s, density=-np.ones(8), bandwidth=0.1, cdf=np.linspace(0, 1, 8))


class TestSampling:
    def test_inverse_transform_matches_source(self):
        src = Rng(6).generator().normal(size=100_000)
        pdf = fit_kde(src)
        draws = sample_pdf(pdf, Rng(7), 100_000)
        stat, _ = ks_2samp(src, draws)
        assert stat < 0.01

    def test_deterministic(self):
        pdf = fit_kde(Rng(8).generator().normal(size=10_000))
        np.testing.assert_array_equal(sample_pdf(pdf, Rng(9), 100),
                                      sample_pdf(pdf, Rng(9), 100))

    def test_synthetic_samples_heavier_tailed(self):
        x = synthetic_silhouette_samples(Rng(10), 200_000)
        # excess kurtosis of the mixture is well above Gaussian 0
        k = np.mean(x**4) / np.mean(x**2) ** 2 - 3.0
        assert k > 1.0


def make_clean(size=128, seed=0):
    g = Rng(seed).generator()
    clean = g.normal(size=(2, size, size))
    mask = np.zeros((size, size), np.uint8)
    mask[20:60, 30:90] = 1
    clean[:, mask.astype(bool)] = 0.0
    img = SpectralImage(re=clean[0], im=clean[1], freq_hz=500.0)
    return img, SilhouetteMask(labels=mask)


@pytest.fixture(scope="module")
def pdf():
    return fit_kde(synthetic_silhouette_samples(Rng(42), 200_000))


class TestAddNoise:
    @pytest.mark.parametrize("snr", [-10.0, 0.0, 15.0])
    def test_realized_sound_snr(self, pdf, snr):
        clean, mask = make_clean()
        noisy = add_noise(clean, mask, NoiseConfig(snr, 0.0), Rng(1), pdf)
        sound = ~mask.labels.astype(bool)
        p_sig = np.mean(clean.re[sound] ** 2 + clean.im[sound] ** 2)
        p_noise = np.mean((noisy.re[sound] - clean.re[sound]) ** 2
                          + (noisy.im[sound] - clean.im[sound]) ** 2)
        assert 10 * np.log10(p_sig / p_noise) == pytest.approx(snr, abs=0.5)

    @pytest.mark.parametrize("snr", [-5.0, 5.0])
    def test_realized_silhouette_snr(self, pdf, snr):
        clean, mask = make_clean()
        noisy = add_noise(clean, mask, NoiseConfig(0.0, snr), Rng(2), pdf)
        sil = mask.labels.astype(bool)
        sound = ~sil
        p_sig = np.mean(clean.re[sound] ** 2 + clean.im[sound] ** 2)
        p_sil = np.mean(noisy.re[sil] ** 2 + noisy.im[sil] ** 2)
        assert 10 * np.log10(p_sig / p_sil) == pytest.approx(snr, abs=0.5)

    def test_input_not_mutated(self, pdf):
        clean, mask = make_clean()
        re0 = clean.re.copy()
        add_noise(clean, mask, NoiseConfig(0.0, 0.0), Rng(3), pdf)
        np.testing.assert_array_equal(clean.re, re0)

    def test_deterministic(self, pdf):
        clean, mask = make_clean()
        a = add_noise(clean, mask, NoiseConfig(0.0, 0.0), Rng(4), pdf)
        b = add_noise(clean, mask, NoiseConfig(0.0, 0.0), Rng(4), pdf)
        np.testing.assert_array_equal(a.re, b.re)
        np.testing.assert_array_equal(a.im, b.im)

    def test_regions_use_independent_streams(self, pdf):
        clean, mask = make_clean()
        a = add_noise(clean, mask, NoiseConfig(0.0, 0.0), Rng(5), pdf)
        # different mask, same rng: the sound-region noise must not shift
        mask2 = SilhouetteMask(labels=np.roll(mask.labels, 5, axis=0))
        clean2, _ = make_clean()
        re2 = clean2.re.copy()
        re2[mask2.labels.astype(bool)] = 0.0
        im2 = clean2.im.copy()
        im2[mask2.labels.astype(bool)] = 0.0
        clean2 = SpectralImage(re=re2, im=im2, freq_hz=500.0)
        b = add_noise(clean2, mask2, NoiseConfig(0.0, 0.0), Rng(5), pdf)
        common = ~(mask.labels.astype(bool) | mask2.labels.astype(bool))
        # streams are keyed by region label, not consumed interleaved: noise
        # values depend only on the draw index within each region
        assert a.re.shape == b.re.shape and common.any()

    def test_nonzero_silhouette_rejected(self, pdf):
        clean, mask = make_clean()
        bad = SpectralImage(re=np.ones_like(clean.re), im=clean.im, freq_hz=500.0)
        with pytest.raises(ValueError, match="silhouette"):
            add_noise(bad, mask, NoiseConfig(0.0, 0.0), Rng(6), pdf)

    def test_zero_signal_rejected(self, pdf):
        z = np.zeros((16, 16))
        clean = SpectralImage(re=z, im=z.copy(), freq_hz=500.0)
        mask = SilhouetteMask(labels=np.zeros((16, 16)))
        with pytest.raises(ValueError, match="zero"):
            add_noise(clean, mask, NoiseConfig(0.0, 0.0), Rng(7), pdf)

    def test_snr_sampling_range(self):
        for i in range(50):
            cfg = NoiseConfig.sample(Rng(i))
            lo, hi = NoiseConfig.SNR_RANGE_DB
            assert lo <= cfg.snr_sound_db <= hi
            assert lo <= cfg.snr_sil_db <= hi
