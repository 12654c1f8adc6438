"""PSNR/SSIM/IoU sanity and the evaluation report plumbing."""

import csv
import json

import numpy as np
import pytest

from soundfield.core import Rng, SilhouetteMask
from soundfield.metrics import (PSNR_CAP_DB, EvalReport, evaluate_dataset, iou,
                                psnr, ssim)


class TestPsnr:
    def test_known_value(self):
        a = np.zeros((8, 8))
        b = np.full((8, 8), 0.1)
        assert psnr(a, b, peak=1.0) == pytest.approx(20.0)

    def test_identical_inputs_hit_cap(self):
        a = Rng(0).generator().normal(size=(8, 8))
        assert psnr(a, a.copy()) == PSNR_CAP_DB

    def test_strictly_monotone_in_mse(self):
        a = np.zeros((16, 16))
        values = [psnr(a, np.full_like(a, eps)) for eps in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)]
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((2, 2)), np.zeros((3, 3)))


class TestSsim:
    def test_self_similarity_is_exactly_one(self):
        x = Rng(1).generator().normal(size=(32, 32))
        assert ssim(x, x.copy()) == 1.0

    def test_multichannel_self_similarity(self):
        x = Rng(2).generator().normal(size=(2, 32, 32))
        assert ssim(x, x.copy()) == 1.0

    def test_noise_lowers_ssim(self):
        g = Rng(3).generator()
        # smooth structured image: noise destroys similarity
        t = np.linspace(0, 4 * np.pi, 48)
        x = np.sin(t)[:, None] * np.cos(t)[None, :]
        y = x + g.normal(size=x.shape) * 0.5
        s = ssim(x, y)
        assert 0.0 < s < 0.9

    def test_symmetry(self):
        g = Rng(4).generator()
        x, y = g.normal(size=(24, 24)), g.normal(size=(24, 24))
        assert ssim(x, y) == pytest.approx(ssim(y, x), abs=1e-12)


class TestIou:
    def test_perfect_overlap(self):
        m = np.zeros((8, 8), np.uint8)
        m[2:5, 2:5] = 1
        assert iou(m, m.copy()) == 1.0

    def test_disjoint(self):
        a = np.zeros((8, 8), np.uint8)
        b = np.zeros((8, 8), np.uint8)
        a[:2, :2] = 1
        b[6:, 6:] = 1
        assert iou(a, b) == 0.0

    def test_half_overlap(self):
        a = np.zeros((8, 8), np.uint8)
        b = np.zeros((8, 8), np.uint8)
        a[0, :4] = 1
        b[0, 2:6] = 1
        assert iou(a, b) == pytest.approx(2.0 / 6.0)

    def test_both_empty_is_one(self):
        z = np.zeros((8, 8), np.uint8)
        assert iou(z, z.copy()) == 1.0

    def test_accepts_mask_objects(self):
        m = SilhouetteMask(labels=np.eye(4))
        assert iou(m, m) == 1.0

    def test_all_zero_prediction_on_nonempty_target(self):
        gt = np.zeros((8, 8), np.uint8)
        gt[2:4, 2:4] = 1
        assert iou(np.zeros_like(gt), gt) == 0.0


class TestEvalReport:
    def test_summary_fields(self, toy_pairs):
        report = evaluate_dataset(lambda p: (p.noisy, p.mask), toy_pairs)
        s = report.summary()
        assert set(s) == {"psnr_db", "ssim", "iou", "n"}
        assert s["n"] == len(toy_pairs)
        assert s["iou"] == pytest.approx(1.0)   # mask passthrough

    def test_identity_transform_matches_input_psnr(self, toy_pairs):
        from soundfield.metrics import input_snr_db   # noqa: F401 (contract neighbor)
        report = evaluate_dataset(lambda p: (p.noisy, None), toy_pairs)
        for rec, pair in zip(report.records, toy_pairs):
            direct = psnr(np.stack([pair.noisy.re, pair.noisy.im]),
                          np.stack([pair.clean.re, pair.clean.im]))
            assert rec["psnr_db"] == pytest.approx(direct)
            assert rec["iou"] is None

    def test_row_count_and_csv(self, tmp_path, toy_pairs):
        report = evaluate_dataset(lambda p: (p.noisy, p.mask), toy_pairs)
        assert len(report.records) == len(toy_pairs)
        report.write_csv(tmp_path / "r.csv")
        with open(tmp_path / "r.csv") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == len(toy_pairs)

    def test_scatter_files(self, tmp_path, toy_pairs):
        report = evaluate_dataset(lambda p: (p.noisy, p.mask), toy_pairs)
        report.write_scatter(tmp_path)
        for name in ("snr_vs_psnr.csv", "area_vs_iou.csv"):
            with open(tmp_path / name) as f:
                assert len(list(csv.reader(f))) == len(toy_pairs) + 1

    def test_json_summary(self, tmp_path, toy_pairs):
        report = evaluate_dataset(lambda p: (p.noisy, None), toy_pairs)
        report.write_json(tmp_path / "s.json")
        s = json.loads((tmp_path / "s.json").read_text())
        assert s["n"] == len(toy_pairs)

    def test_out_of_range_metric_rejected(self):
        with pytest.raises(ValueError):
            EvalReport().add(ssim=1.5)
        with pytest.raises(ValueError):
            EvalReport().add(iou=-0.1)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            evaluate_dataset(lambda p: (p.noisy, None), [])
