import numpy as np
import pytest

from soundfield.acoustics import SimConfig
from soundfield.core import Rng, SamplePair, SilhouetteMask, SpectralImage
from soundfield.geometry import GeometryConfig


@pytest.fixture(scope="session")
def small_sim():
    """A 1.28 m domain with a 64x64 observation window: fast but realistic."""
    return SimConfig(extent_m=1.28, obs_extent_m=0.64)


@pytest.fixture(scope="session")
def small_geo():
    return GeometryConfig(num_shapes=(1, 2))


def make_pair(seed=0, size=16, freq_hz=500.0):
    """A synthetic SamplePair (not simulation output) for plumbing tests."""
    g = Rng(seed).generator()
    clean = g.normal(size=(2, size, size)) * 0.5
    mask = np.zeros((size, size), np.uint8)
    mask[size // 4:size // 2, size // 3:2 * size // 3] = 1
    clean[:, mask.astype(bool)] = 0.0
    noisy = clean + g.normal(size=clean.shape) * 0.2
    return SamplePair(
        noisy=SpectralImage(re=noisy[0], im=noisy[1], freq_hz=freq_hz, bin_index=3),
        clean=SpectralImage(re=clean[0], im=clean[1], freq_hz=freq_hz, bin_index=3),
        mask=SilhouetteMask(labels=mask),
        meta={"index": seed},
    )


@pytest.fixture()
def toy_pairs():
    return [make_pair(seed=i) for i in range(6)]
