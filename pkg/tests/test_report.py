import json
import math

import numpy as np
import pytest
import torch

from estrnn.config import ModelConfig
from estrnn.errors import ShapeError
from estrnn.evaluation.metrics import psnr, ssim
from estrnn.evaluation.report import (benchmark_and_report, deblur_sequence, efficiency_csv,
                                      efficiency_rows, evaluate_dataset, scatter_csv,
                                      time_per_frame)
from estrnn.io import SequencePair
from estrnn.model import ESTRNN

IDENTITY = ModelConfig(n_blocks=1, n_channels=8, growth_rate=4, global_skip=True)


def test_identity_on_ground_truth(toy_dataset):
    gt = [SequencePair(s.name, s.sharp, s.sharp) for s in toy_dataset]
    table = evaluate_dataset(ESTRNN(IDENTITY), gt)
    assert table.mean["psnr"] == 100.0
    assert table.mean["ssim"] == pytest.approx(1.0, abs=1e-12)


def test_blur_baseline_and_mean(toy_dataset):
    table = evaluate_dataset(ESTRNN(IDENTITY), toy_dataset)
    for row, seq in zip(table.rows, toy_dataset):
        valid = slice(2, len(seq.blur) - 2)
        expected = np.mean([psnr(b, s) for b, s in zip(seq.blur[valid], seq.sharp[valid])])
        assert row["blur_psnr"] == pytest.approx(expected)
        assert row["blur_ssim"] == pytest.approx(ssim(seq.blur[valid], seq.sharp[valid]))
        # the identity model reproduces the blurry input
        assert row["psnr"] == pytest.approx(row["blur_psnr"])
        assert row["frames"] == len(seq.blur) - 4
    for key in ("psnr", "ssim", "blur_psnr", "blur_ssim"):
        assert table.mean[key] == pytest.approx(np.mean([r[key] for r in table.rows]))
    lines = table.to_csv().splitlines()
    assert lines[0] == "sequence,frames,psnr,ssim,blur_psnr,blur_ssim"
    assert lines[-1].startswith("mean,16,")


def test_evaluation_deterministic(toy_dataset):
    model = ESTRNN(ModelConfig(n_blocks=1, n_channels=8, growth_rate=4))
    assert evaluate_dataset(model, toy_dataset).to_csv() == \
        evaluate_dataset(model, toy_dataset).to_csv()


def test_indivisible_resolution_modes():
    model = ESTRNN(IDENTITY)
    blur = np.random.default_rng(0).random((5, 3, 30, 34)).astype(np.float32)
    with pytest.raises(ShapeError, match="crop"):
        deblur_sequence(model, blur)
    padded, _ = deblur_sequence(model, blur, resize="pad")
    assert padded.shape == (1, 3, 30, 34)
    assert np.allclose(padded[0], blur[2], atol=1e-6)
    cropped, _ = deblur_sequence(model, blur, resize="crop")
    assert cropped.shape == (1, 3, 28, 32)


def test_efficiency_rows_and_files(tmp_path, toy_dataset):
    cfg = ModelConfig(n_blocks=1, n_channels=8, growth_rate=4)
    entries = [("a", ESTRNN(cfg, seed=0)), ("b", ESTRNN(cfg, seed=1))]
    rows = benchmark_and_report(entries, tmp_path, (32, 32), toy_dataset, benchmark=True,
                                n_runs=3, warmup=1)
    assert rows[0]["gmacs"] == rows[1]["gmacs"]
    for r in rows:
        assert r["fps"] == pytest.approx(1000.0 / r["ms_per_frame"])
        assert r["psnr"] is not None
    header = (tmp_path / "efficiency.csv").read_text().splitlines()[0]
    assert header == "name,gmacs,mparams,ms_per_frame,fps,psnr,ssim"
    scatter = (tmp_path / "scatter.csv").read_text().splitlines()
    assert scatter[0] == "log10_gmacs,psnr,label"
    assert float(scatter[1].split(",")[0]) == pytest.approx(math.log10(rows[0]["gmacs"]), abs=1e-6)
    meta = json.loads((tmp_path / "efficiency_meta.json").read_text())
    assert meta["timing"] == {"runs": 3, "warmup": 1, "statistic": "median"}
    assert meta["hardware"]["threads"] >= 1
    assert (tmp_path / "efficiency.png").stat().st_size > 0


def test_scatter_abscissa():
    rows = [{"name": "x", "gmacs": 100.0, "psnr": 30.0}]
    assert scatter_csv(rows).splitlines()[1] == "2.000000,30.000000,x"


def test_config_only_rows():
    rows, reports = efficiency_rows([("c", ModelConfig())], (1280, 720))
    assert rows[0]["ms_per_frame"] is None and rows[0]["gmacs"] == reports[0].gmacs
    assert efficiency_csv(rows).splitlines()[1].startswith("c,149.999654,")


def test_time_per_frame_positive():
    model = ESTRNN(ModelConfig(n_blocks=1, n_channels=8, growth_rate=4))
    assert time_per_frame(model, (32, 32), n_runs=3, warmup=1) > 0
