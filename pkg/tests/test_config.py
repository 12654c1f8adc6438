"""YAML pipeline configuration: defaults, validation, round-trip."""

import pytest
import yaml

from soundfield.config import (ConfigError, PipelineConfig, from_dict, load_config,
                               save_config, to_dict)


class TestFromDict:
    def test_minimal_config_gets_defaults(self):
        cfg = from_dict({"seed": 3})
        assert cfg.seed == 3
        assert cfg.sim.dx == 0.01
        assert cfg.sim.dt == 1.21e-5
        assert cfg.geometry.max_area_frac == 0.35
        assert cfg.train.lam == 10.0
        assert cfg.train.alpha == 0.5
        assert cfg.train.lr == 1e-3
        assert cfg.train.beta1 == cfg.train.beta2 == 0.9
        assert cfg.dataset.num_scenes == 50
        assert cfg.filter is None

    def test_seed_required(self):
        with pytest.raises(ConfigError, match="seed"):
            from_dict({"sim": {}})

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            from_dict({"seed": 0, "simulation": {}})

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError, match="dx_m"):
            from_dict({"seed": 0, "sim": {"dx_m": 0.01}})

    def test_lists_become_tuples(self):
        cfg = from_dict({"seed": 0, "dataset": {"splits": [0.7, 0.2, 0.1]},
                         "geometry": {"num_shapes": [2, 3]}})
        assert cfg.dataset.splits == (0.7, 0.2, 0.1)
        assert cfg.geometry.num_shapes == (2, 3)

    def test_filter_section(self):
        cfg = from_dict({"seed": 0, "filter": {"kind": "time_bandpass",
                                               "center_hz": 500.0,
                                               "bandwidth_hz": 100.0}})
        assert cfg.filter.band() == (450.0, 550.0)

    def test_noise_config_needs_both_or_neither(self):
        cfg = from_dict({"seed": 0, "dataset": {"snr_sound_db": 0.0}})
        with pytest.raises(ConfigError):
            cfg.dataset.noise_config()
        assert from_dict({"seed": 0}).dataset.noise_config() is None
        fixed = from_dict({"seed": 0, "dataset": {"snr_sound_db": 1.0,
                                                  "snr_sil_db": 2.0}})
        assert fixed.dataset.noise_config().snr_sil_db == 2.0


class TestYaml:
    def test_load_and_save_round_trip(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump({"seed": 9, "train": {"epochs": 3}}))
        cfg = load_config(path)
        assert cfg.train.epochs == 3
        save_config(cfg, tmp_path / "out.yaml")
        again = load_config(tmp_path / "out.yaml")
        assert to_dict(again) == to_dict(cfg)

    def test_non_mapping_rejected(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("- just\n- a\n- list\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_defaults_survive_round_trip(self, tmp_path):
        cfg = PipelineConfig(seed=1)
        save_config(cfg, tmp_path / "c.yaml")
        back = load_config(tmp_path / "c.yaml")
        assert back.sim == cfg.sim
        assert back.train.lr == cfg.train.lr
