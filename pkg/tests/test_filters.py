"""Classical baseline filters: band behavior, linearity, idempotence."""

import numpy as np
import pytest

from soundfield.core import FieldVideo, Rng
from soundfield.filters import (FilterSpec, apply_filter, spatiotemporal_filter,
                                time_bandpass)

FS = 10000.0


def tone_video(freq, w=16, h=16, t=200, amp=1.0, seed=None):
    time = np.arange(t) / FS
    data = amp * np.cos(2 * np.pi * freq * time)[None, None, :] * np.ones((w, h, 1))
    if seed is not None:
        data = data + Rng(seed).generator().normal(size=data.shape)
    return FieldVideo(data=data, dx=0.01, fs=FS)


class TestSpec:
    def test_kind_validated(self):
        with pytest.raises(ValueError):
            FilterSpec(kind="median", center_hz=100.0, bandwidth_hz=10.0)

    def test_band_arithmetic(self):
        spec = FilterSpec(kind="time_bandpass", center_hz=1000.0, bandwidth_hz=200.0)
        assert spec.band() == (900.0, 1100.0)

    def test_band_outside_nyquist_rejected(self):
        spec = FilterSpec(kind="time_bandpass", center_hz=4990.0, bandwidth_hz=100.0)
        with pytest.raises(ValueError):
            spec.check_band(FS)


class TestTimeBandpass:
    SPEC = FilterSpec(kind="time_bandpass", center_hz=1000.0, bandwidth_hz=200.0)

    def test_passes_in_band_tone(self):
        v = tone_video(1000.0)
        out = time_bandpass(v, self.SPEC)
        np.testing.assert_allclose(out.data, v.data, atol=1e-10)

    def test_rejects_out_of_band_tone(self):
        v = tone_video(2000.0)
        out = time_bandpass(v, self.SPEC)
        assert np.max(np.abs(out.data)) < 1e-10

    def test_linearity(self):
        a = tone_video(1000.0, seed=1)
        b = tone_video(950.0, seed=2)
        lhs = time_bandpass(FieldVideo(data=2 * a.data + 3 * b.data, dx=a.dx, fs=FS),
                            self.SPEC)
        rhs = 2 * time_bandpass(a, self.SPEC).data + 3 * time_bandpass(b, self.SPEC).data
        np.testing.assert_allclose(lhs.data, rhs, atol=1e-9)

    def test_idempotence(self):
        v = tone_video(1000.0, seed=3)
        once = time_bandpass(v, self.SPEC)
        twice = time_bandpass(once, self.SPEC)
        np.testing.assert_allclose(twice.data, once.data, atol=1e-9)

    def test_snr_improvement(self):
        clean = tone_video(1000.0)
        noisy = tone_video(1000.0, seed=4)
        out = time_bandpass(noisy, self.SPEC)
        before = np.mean(clean.data**2) / np.mean((noisy.data - clean.data) ** 2)
        after = np.mean(clean.data**2) / np.mean((out.data - clean.data) ** 2)
        assert 10 * np.log10(after / before) >= 10.0


class TestSpatiotemporal:
    SPEC = FilterSpec(kind="spatiotemporal", center_hz=1000.0, bandwidth_hz=400.0)

    def test_linearity(self):
        a = tone_video(1000.0, seed=5)
        b = tone_video(1100.0, seed=6)
        lhs = spatiotemporal_filter(
            FieldVideo(data=a.data - 2 * b.data, dx=a.dx, fs=FS), self.SPEC)
        rhs = (spatiotemporal_filter(a, self.SPEC).data
               - 2 * spatiotemporal_filter(b, self.SPEC).data)
        np.testing.assert_allclose(lhs.data, rhs, atol=1e-9)

    def test_idempotence(self):
        v = tone_video(1000.0, seed=7)
        once = spatiotemporal_filter(v, self.SPEC)
        twice = spatiotemporal_filter(once, self.SPEC)
        np.testing.assert_allclose(twice.data, once.data, atol=1e-9)

    def test_passes_physical_plane_wave(self):
        # wave matching the dispersion relation omega = c |k| survives
        c, f = 340.0, 1000.0
        k = 2 * np.pi * f / c
        x = np.arange(32) * 0.01
        t = np.arange(256) / FS
        data = np.cos(k * x[:, None, None] - 2 * np.pi * f * t[None, None, :])
        data = np.tile(data, (1, 8, 1))
        v = FieldVideo(data=data, dx=0.01, fs=FS)
        out = spatiotemporal_filter(v, self.SPEC)
        # most of the energy is on the cone
        assert np.sum(out.data**2) / np.sum(v.data**2) > 0.7

    def test_rejects_off_cone_noise(self):
        g = Rng(8).generator()
        v = FieldVideo(data=g.normal(size=(32, 8, 256)), dx=0.01, fs=FS)
        out = spatiotemporal_filter(v, self.SPEC)
        # broadband white noise lives almost entirely off the cone
        assert np.sum(out.data**2) < 0.1 * np.sum(v.data**2)


def test_apply_filter_dispatch():
    v = tone_video(1000.0, seed=9)
    spec_t = FilterSpec(kind="time_bandpass", center_hz=1000.0, bandwidth_hz=200.0)
    spec_s = FilterSpec(kind="spatiotemporal", center_hz=1000.0, bandwidth_hz=200.0)
    np.testing.assert_array_equal(apply_filter(v, spec_t).data, time_bandpass(v, spec_t).data)
    np.testing.assert_array_equal(apply_filter(v, spec_s).data,
                                  spatiotemporal_filter(v, spec_s).data)
