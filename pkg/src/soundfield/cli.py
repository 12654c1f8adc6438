"""Command-line surface: simulate, make-dataset, add-noise, train, infer,
filter, evaluate.

Every command exits 0 on success; failures print a one-line JSON object
(``{"error": ..., "message": ...}``) to stderr and exit 1.  The only
environment knob is ``SOUNDFIELD_WORKERS``; all science parameters live in
the YAML config.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from . import __version__
from .acoustics import clean_target, sample_scene, scene_provenance, simulate
from .config import load_config
from .core import (FieldVideo, Rng, SilhouetteMask, SpectralImage, read_tensor,
                   write_tensor)
from .dataset import load_dataset, make_dataset, silhouette_pdf
from .filters import FilterSpec, apply_filter
from .metrics import evaluate_dataset
from .model import MultitaskNet, infer_image, infer_video, load_checkpoint, save_checkpoint, train
from .noise import NoiseConfig, add_noise


def _json_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as e:  # noqa: BLE001 - the CLI boundary
            print(json.dumps({"error": type(e).__name__, "message": str(e)}),
                  file=sys.stderr)
            sys.exit(1)
    return wrapper


def render_png(path, array, peak):
    """Grayscale PNG mapping [-peak, +peak] linearly to [0, 255].

    The color scale goes to a JSON sidecar so every rendering of one artifact
    shares it.
    """
    a = np.clip((np.asarray(array, dtype=np.float64) + peak) / (2.0 * peak), 0.0, 1.0)
    Image.fromarray(np.round(a.T * 255.0).astype(np.uint8)).save(path)
    with open(str(path) + ".json", "w") as f:
        json.dump({"scale_min": -peak, "scale_max": peak}, f)
        f.write("\n")


def _read_input(path):
    """A container file is a FieldVideo iff its sidecar declares ``fs``."""
    arr, meta = read_tensor(path)
    if "fs" in meta:
        return FieldVideo(data=arr.astype(np.float64), dx=meta.get("dx", 1.0),
                          fs=meta["fs"])
    if arr.ndim != 3 or arr.shape[0] != 2:
        raise click.ClickException(
            f"{path}: expected a (2, W, H) spectral image or a video with 'fs' metadata")
    return SpectralImage(re=arr[0], im=arr[1], freq_hz=meta.get("freq_hz", 0.0),
                         bin_index=meta.get("bin_index", 0))


@click.group()
@click.version_option(__version__)
def main():
    """Sound-field imaging toolkit."""


@main.command("simulate")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--index", default=0, show_default=True, help="Scene index (selects the random stream).")
@_json_errors
def cmd_simulate(config_path, out_dir, index):
    """Sample one random scene, run the simulation, store the recording."""
    cfg = load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = Rng(cfg.seed).split(f"scene:{index}").split("scene")
    scene = sample_scene(rng, cfg.geometry, cfg.sim)
    video = simulate(scene, cfg.sim)
    write_tensor(out / "field.bin", video.data,
                 {"fs": video.fs, "dx": video.dx, "freq_hz": scene.freq_hz})
    clean = clean_target(video, scene.mask, scene.freq_hz)
    write_tensor(out / "clean.bin", np.stack([clean.re, clean.im]),
                 {"freq_hz": clean.freq_hz, "bin_index": clean.bin_index})
    write_tensor(out / "mask.bin", scene.mask.labels)
    with open(out / "scene.json", "w") as f:
        json.dump(scene_provenance(scene, cfg.sim), f, indent=2, sort_keys=True)
        f.write("\n")
    peak = float(np.abs(video.data).max()) or 1.0
    render_png(out / "frame_last.png", video.data[:, :, -1], peak)
    click.echo(f"wrote scene {index} to {out}")


@main.command("make-dataset")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=None, type=click.Path())
@_json_errors
def cmd_make_dataset(config_path, out_dir):
    """Generate the configured dataset (stratified over source counts)."""
    cfg = load_config(config_path)
    out = Path(out_dir) if out_dir else Path(cfg.out_dir) / "dataset"
    make_dataset(out, cfg.dataset.num_scenes, cfg.seed, cfg.sim, cfg.geometry,
                 splits=cfg.dataset.splits, noise_cfg=cfg.dataset.noise_config(),
                 pdf_samples=cfg.dataset.pdf_samples)
    click.echo(f"wrote {cfg.dataset.num_scenes} scenes to {out}")


@main.command("add-noise")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--clean", "clean_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@_json_errors
def cmd_add_noise(config_path, clean_path, mask_path, out_path):
    """Corrupt a clean spectral image with the two-regime noise model."""
    cfg = load_config(config_path)
    arr, meta = read_tensor(clean_path)
    clean = SpectralImage(re=arr[0], im=arr[1], freq_hz=meta.get("freq_hz", 0.0),
                          bin_index=meta.get("bin_index", 0))
    mask_arr, _ = read_tensor(mask_path, with_metadata=False)
    mask = SilhouetteMask(labels=mask_arr)
    master = Rng(cfg.seed)
    ncfg = cfg.dataset.noise_config() or NoiseConfig.sample(master.split("add-noise-snr"))
    pdf = silhouette_pdf(master, cfg.dataset.pdf_samples)
    noisy = add_noise(clean, mask, ncfg, master.split("add-noise"), pdf)
    write_tensor(out_path, np.stack([noisy.re, noisy.im]).astype(arr.dtype),
                 {**meta, "snr_sound_db": ncfg.snr_sound_db, "snr_sil_db": ncfg.snr_sil_db})
    click.echo(f"wrote {out_path}")


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--resume", "resume_dir", default=None, type=click.Path(exists=True),
              help="Checkpoint directory to continue from.")
@_json_errors
def cmd_train(config_path, dataset_dir, out_dir, resume_dir):
    """Train the multitask network on a generated dataset."""
    cfg = load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_pairs = load_dataset(dataset_dir, "train")
    val_pairs = load_dataset(dataset_dir, "val")

    net = None
    start_step = 0
    if resume_dir:
        net, extra = load_checkpoint(resume_dir)
        start_step = int(extra.get("step", 0))
    net, history = train(train_pairs, cfg.train, Rng(cfg.seed).split("train"),
                         val_dataset=val_pairs or None, net=net, start_step=start_step)
    save_checkpoint(net, out / "checkpoint",
                    extra={"step": history[-1]["step"], "epochs": len(history),
                           "seed": cfg.seed})
    with open(out / "history.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(history[0].keys()))
        w.writeheader()
        w.writerows(history)
    if val_pairs:
        report = evaluate_dataset(
            lambda pair: infer_image(net, pair.noisy, cfg.train.seg_threshold),
            val_pairs, peak=cfg.train.peak)
        report.write_json(out / "val_report.json")
        report.write_csv(out / "val_report.csv")
    click.echo(f"trained {len(history)} epochs; checkpoint in {out / 'checkpoint'}")


@main.command("infer")
@click.option("--checkpoint", "ckpt_dir", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--peak", default=1.0, show_default=True, help="PNG color scale half-range.")
@_json_errors
def cmd_infer(ckpt_dir, input_path, out_dir, threshold, peak):
    """Run a checkpoint on a spectral image or field video."""
    net, _ = load_checkpoint(ckpt_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = _read_input(input_path)
    if isinstance(data, SpectralImage):
        denoised, mask = infer_image(net, data, threshold)
        write_tensor(out / "denoised.bin", np.stack([denoised.re, denoised.im]),
                     {"freq_hz": denoised.freq_hz, "bin_index": denoised.bin_index})
        render_png(out / "denoised_re.png", denoised.re, peak)
        render_png(out / "denoised_im.png", denoised.im, peak)
    else:
        denoised_video, mask, k_dom = infer_video(net, data, threshold)
        write_tensor(out / "denoised.bin", denoised_video.data,
                     {"fs": denoised_video.fs, "dx": denoised_video.dx,
                      "dominant_bin": k_dom})
        T = denoised_video.num_frames
        for t in sorted({0, T // 4, T // 2, 3 * T // 4, T - 1}):
            render_png(out / f"denoised_frame_{t:05d}.png",
                       denoised_video.data[:, :, t], peak)
    write_tensor(out / "mask.bin", mask.labels)
    render_png(out / "mask.png", mask.labels.astype(np.float64) * 2.0 - 1.0, 1.0)
    click.echo(f"wrote outputs to {out}")


def _filter_spec(cfg):
    if cfg.filter is None:
        raise click.ClickException("config has no 'filter' section")
    return cfg.filter


@main.command("filter")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@_json_errors
def cmd_filter(config_path, input_path, out_path):
    """Apply the configured classical filter to a field video."""
    cfg = load_config(config_path)
    spec = _filter_spec(cfg)
    video = _read_input(input_path)
    if not isinstance(video, FieldVideo):
        raise click.ClickException("filter input must be a field video (with 'fs' metadata)")
    out = apply_filter(video, spec)
    write_tensor(out_path, out.data, {"fs": out.fs, "dx": out.dx, "filter": spec.kind,
                                      "band_hz": list(spec.band())})
    click.echo(f"wrote {out_path}")


def spectral_band_transform(spec: FilterSpec):
    """The per-bin action of a brick-wall bandpass on single-bin images:
    pass the image through when its frequency is in the band, zero it
    otherwise.  Satisfies the evaluation transform contract."""
    lo, hi = spec.band()

    def transform(pair):
        img = pair.noisy
        if lo <= img.freq_hz <= hi:
            return img, None
        z = np.zeros_like(img.re)
        return SpectralImage(re=z, im=z.copy(), freq_hz=img.freq_hz,
                             bin_index=img.bin_index), None
    return transform


@main.command("evaluate")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--target", required=True,
              help="Checkpoint directory, 'filter' (config section), or 'identity'.")
@click.option("--split", default="test", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_json_errors
def cmd_evaluate(config_path, dataset_dir, target, split, out_dir):
    """Score a checkpoint or filter over a dataset split."""
    cfg = load_config(config_path)
    pairs = load_dataset(dataset_dir, split)
    if target == "identity":
        transform = lambda pair: (pair.noisy, None)  # noqa: E731
    elif target == "filter":
        transform = spectral_band_transform(_filter_spec(cfg))
    else:
        net, _ = load_checkpoint(target)
        transform = lambda pair: infer_image(net, pair.noisy, cfg.train.seg_threshold)  # noqa: E731
    report = evaluate_dataset(transform, pairs, peak=cfg.train.peak)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write_json(out / "summary.json")
    report.write_csv(out / "report.csv")
    report.write_scatter(out)
    click.echo(json.dumps(report.summary()))


if __name__ == "__main__":
    main()
