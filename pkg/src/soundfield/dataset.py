"""Reproducible dataset generation: simulate, spectralize, corrupt, store.

Scene ``i`` draws all its randomness from ``master.split(f"scene:{i}")``, so
the resulting bytes depend only on the master seed and the configuration —
never on worker count or scheduling.  Worker count comes from the
``SOUNDFIELD_WORKERS`` environment variable (default 1).
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .acoustics import (SimConfig, clean_target, sample_scene, scene_provenance,
                        simulate)
from .core import Rng, SamplePair, SilhouetteMask, SpectralImage, read_tensor, write_tensor
from .geometry import GeometryConfig
from .metrics import input_snr_db
from .noise import EmpiricalPdf, NoiseConfig, add_noise, fit_kde, synthetic_silhouette_samples

WORKERS_ENV = "SOUNDFIELD_WORKERS"
SOURCE_COUNTS = (1, 2, 3, 4, 5)


def num_workers():
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def silhouette_pdf(master: Rng, n_samples=1_000_000) -> EmpiricalPdf:
    """The builtin silhouette-noise density, deterministic in the master seed."""
    return fit_kde(synthetic_silhouette_samples(master.split("silhouette-noise"), n_samples))


def generate_sample(index, master: Rng, sim_cfg: SimConfig, geo_cfg: GeometryConfig,
                    pdf: EmpiricalPdf, noise_cfg: NoiseConfig | None = None) -> SamplePair:
    """Simulate scene ``index`` and return its (noisy, clean, mask) triple.

    The source count is stratified: scene i has (i mod 5) + 1 sources, so any
    multiple of 5 scenes covers the counts uniformly.  ``noise_cfg = None``
    draws both SNRs per scene from U[-20, 20] dB.
    """
    rng = master.split(f"scene:{index}")
    n_src = SOURCE_COUNTS[index % len(SOURCE_COUNTS)]
    scene = sample_scene(rng.split("scene"), geo_cfg, sim_cfg, num_sources=n_src)
    video = simulate(scene, sim_cfg)
    clean = clean_target(video, scene.mask, scene.freq_hz)
    ncfg = noise_cfg if noise_cfg is not None else NoiseConfig.sample(rng.split("snr"))
    noisy = add_noise(clean, scene.mask, ncfg, rng.split("noise"), pdf)
    meta = scene_provenance(scene, sim_cfg)
    meta.update(index=index, num_sources=n_src,
                snr_sound_db=ncfg.snr_sound_db, snr_sil_db=ncfg.snr_sil_db,
                realized_snr_db=input_snr_db(noisy, clean, scene.mask),
                silhouette_area_frac=scene.mask.area_fraction())
    return SamplePair(noisy=noisy, clean=clean, mask=scene.mask, meta=meta)


def _image_stack(img: SpectralImage):
    return np.stack([img.re, img.im]).astype(np.float32)


def _write_sample(directory: Path, pair: SamplePair):
    directory.mkdir(parents=True, exist_ok=True)
    tensor_meta = {"freq_hz": pair.clean.freq_hz, "bin_index": pair.clean.bin_index,
                   "layout": "(re, im)"}
    write_tensor(directory / "clean.bin", _image_stack(pair.clean), tensor_meta)
    write_tensor(directory / "noisy.bin", _image_stack(pair.noisy), tensor_meta)
    write_tensor(directory / "mask.bin", pair.mask.labels)
    with open(directory / "scene.json", "w") as f:
        json.dump(pair.meta, f, indent=2, sort_keys=True)
        f.write("\n")


def split_counts(n, splits):
    """Integer train/val/test sizes; remainders go to the training split."""
    if abs(sum(splits) - 1.0) > 1e-9 or any(s < 0 for s in splits):
        raise ValueError("splits must be non-negative and sum to 1")
    n_val = int(n * splits[1])
    n_test = int(n * splits[2])
    return n - n_val - n_test, n_val, n_test


def make_dataset(out_dir, num_scenes, seed, sim_cfg: SimConfig = SimConfig(),
                 geo_cfg: GeometryConfig = GeometryConfig(),
                 splits=(0.8, 0.1, 0.1), noise_cfg: NoiseConfig | None = None,
                 pdf_samples=1_000_000):
    """Generate ``num_scenes`` samples under ``out_dir`` and write a manifest.

    Scenes are assigned to train/val/test in index order (disjoint, seed
    ordered).  Output bytes are identical across runs and worker counts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    master = Rng(seed)
    pdf = silhouette_pdf(master, pdf_samples)
    n_train, n_val, n_test = split_counts(num_scenes, splits)

    def job(i):
        pair = generate_sample(i, master, sim_cfg, geo_cfg, pdf, noise_cfg)
        _write_sample(out_dir / f"scene_{i:05d}", pair)

    workers = num_workers()
    if workers == 1:
        for i in range(num_scenes):
            job(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(job, range(num_scenes)))

    names = [f"scene_{i:05d}" for i in range(num_scenes)]
    manifest = {
        "num_scenes": num_scenes,
        "seed": seed,
        "splits": {
            "train": names[:n_train],
            "val": names[n_train:n_train + n_val],
            "test": names[n_train + n_val:],
        },
        "noise": (None if noise_cfg is None
                  else {"snr_sound_db": noise_cfg.snr_sound_db,
                        "snr_sil_db": noise_cfg.snr_sil_db}),
        "silhouette_pdf": pdf.to_json(),
        "sim": {"dx": sim_cfg.dx, "dt": sim_cfg.dt, "extent_m": sim_cfg.extent_m,
                "obs_extent_m": sim_cfg.obs_extent_m, "pml_cells": sim_cfg.pml_cells,
                "min_window": sim_cfg.min_window},
    }
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return out_dir


def read_sample(directory) -> SamplePair:
    directory = Path(directory)
    clean_arr, meta = read_tensor(directory / "clean.bin")
    noisy_arr, _ = read_tensor(directory / "noisy.bin")
    mask_arr, _ = read_tensor(directory / "mask.bin", with_metadata=False)
    scene_meta = json.loads((directory / "scene.json").read_text())
    freq = meta.get("freq_hz", 0.0)
    k = meta.get("bin_index", 0)
    return SamplePair(
        noisy=SpectralImage(re=noisy_arr[0], im=noisy_arr[1], freq_hz=freq, bin_index=k),
        clean=SpectralImage(re=clean_arr[0], im=clean_arr[1], freq_hz=freq, bin_index=k),
        mask=SilhouetteMask(labels=mask_arr),
        meta=scene_meta,
    )


def load_dataset(directory, split=None):
    """Load samples (optionally one split) as a list of SamplePair."""
    directory = Path(directory)
    with open(directory / "manifest.json") as f:
        manifest = json.load(f)
    if split is None:
        names = sorted(n for names in manifest["splits"].values() for n in names)
    else:
        names = manifest["splits"][split]
    return [read_sample(directory / n) for n in names]
