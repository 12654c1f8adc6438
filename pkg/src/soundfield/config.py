"""Declarative YAML pipeline configuration with full defaulting.

Every key is optional except ``seed``; omitted keys fall back to the library
defaults of the owning module, so a minimal config is just ``seed: 0``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import yaml

from .acoustics import SimConfig
from .filters import FilterSpec
from .geometry import GeometryConfig
from .model.training import TrainConfig
from .noise import NoiseConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    num_scenes: int = 50
    splits: tuple = (0.8, 0.1, 0.1)
    # None: draw each scene's SNRs from U[-20, 20] dB.
    snr_sound_db: float | None = None
    snr_sil_db: float | None = None
    pdf_samples: int = 1_000_000

    def noise_config(self):
        if self.snr_sound_db is None and self.snr_sil_db is None:
            return None
        if self.snr_sound_db is None or self.snr_sil_db is None:
            raise ConfigError("set both snr_sound_db and snr_sil_db, or neither")
        return NoiseConfig(snr_sound_db=self.snr_sound_db, snr_sil_db=self.snr_sil_db)


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    out_dir: str = "artifacts"
    sim: SimConfig = SimConfig()
    geometry: GeometryConfig = GeometryConfig()
    dataset: DatasetConfig = DatasetConfig()
    train: TrainConfig = None
    filter: FilterSpec | None = None   # optional classical-filter section

    def __post_init__(self):
        if self.train is None:
            object.__setattr__(self, "train", TrainConfig())


_SECTIONS = {
    "sim": SimConfig,
    "geometry": GeometryConfig,
    "dataset": DatasetConfig,
    "train": TrainConfig,
    "filter": FilterSpec,
}


def _build_section(cls, values, section):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(values) - set(fields)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {sorted(unknown)}")
    kwargs = {}
    for key, val in values.items():
        if isinstance(val, list):
            val = tuple(tuple(v) if isinstance(v, list) else v for v in val)
        kwargs[key] = val
    return cls(**kwargs)


def from_dict(data) -> PipelineConfig:
    data = dict(data or {})
    if "seed" not in data:
        raise ConfigError("config must set 'seed' (reproducibility is mandatory)")
    kwargs = {"seed": int(data.pop("seed"))}
    if "out_dir" in data:
        kwargs["out_dir"] = str(data.pop("out_dir"))
    for section, cls in _SECTIONS.items():
        values = data.pop(section, None)
        if values is not None:
            if not isinstance(values, dict):
                raise ConfigError(f"'{section}' must be a mapping")
            kwargs[section] = _build_section(cls, values, section)
    if data:
        raise ConfigError(f"unknown top-level key(s): {sorted(data)}")
    return PipelineConfig(**kwargs)


def load_config(path) -> PipelineConfig:
    with open(path) as f:
        data = yaml.safe_load(f)
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return from_dict(data)


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def to_dict(cfg: PipelineConfig):
    out = {"seed": cfg.seed, "out_dir": cfg.out_dir}
    for section, cls in _SECTIONS.items():
        value = getattr(cfg, section)
        if value is not None:
            out[section] = _plain(dataclasses.asdict(value))
    return out


def save_config(cfg: PipelineConfig, path):
    with open(path, "w") as f:
        yaml.safe_dump(to_dict(cfg), f, sort_keys=True)
    return Path(path)
