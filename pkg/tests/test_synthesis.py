import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from estrnn.config import SynthesisConfig
from estrnn.errors import EstrnnError, RangeError, ShapeError
from estrnn.io import DatasetManifest, load_split, read_frames, write_frames
from estrnn.synthesis import (assign_splits, build_dataset, build_dataset_from_arrays,
                              center_index, crf_transform, select_center_sharp,
                              synthesize_blur, synthesize_sequence, window_count)

IDENT = SynthesisConfig(n_subframes=2, crf="identity")
GAMMA = SynthesisConfig(n_subframes=2, crf="gamma", gamma=2.2)

unit_imgs = arrays(np.float64, (2, 3, 4, 5), elements=st.floats(0, 1))


def test_identity_crf_is_noop(rng):
    img = rng.random((3, 8, 8))
    for direction in ("encode", "linearize"):
        assert np.array_equal(crf_transform(img, IDENT, direction), img)


def test_gamma_closed_form():
    assert crf_transform(np.array([0.5]), GAMMA, "encode")[0] == pytest.approx(0.7297, abs=1e-4)


def test_gamma_inverse_pair(rng):
    img = rng.random((3, 16, 16))
    back = crf_transform(crf_transform(img, GAMMA, "encode"), GAMMA, "linearize")
    assert np.max(np.abs(back - img)) < 1e-6


def test_crf_range_error():
    with pytest.raises(RangeError):
        crf_transform(np.array([1.2]), GAMMA, "encode")
    with pytest.raises(RangeError):
        crf_transform(np.array([-0.1]), IDENT, "linearize")


def test_identical_subframes_return_the_frame(rng):
    frame = rng.random((3, 6, 6))
    for crf in ("identity", "gamma"):
        cfg = SynthesisConfig(n_subframes=5, crf=crf)
        assert np.allclose(synthesize_blur(np.stack([frame] * 5), cfg), frame, atol=1e-12)


def test_averaging_identity_crf():
    subs = np.stack([np.full((3, 4, 4), 0.2), np.full((3, 4, 4), 0.4)])
    assert np.allclose(synthesize_blur(subs, IDENT), 0.3)


def test_averaging_gamma_closed_form():
    subs = np.stack([np.zeros((3, 4, 4)), np.ones((3, 4, 4))])
    assert np.allclose(synthesize_blur(subs, GAMMA), 0.7297, atol=1e-4)


def test_subframe_count_mismatch():
    with pytest.raises(ShapeError):
        synthesize_blur(np.zeros((3, 3, 4, 4)), IDENT)


@settings(max_examples=40, deadline=None)
@given(subs=unit_imgs)
def test_convexity(subs):
    blur = synthesize_blur(subs, IDENT)
    assert np.all(blur >= subs.min(axis=0) - 1e-12)
    assert np.all(blur <= subs.max(axis=0) + 1e-12)


@settings(max_examples=40, deadline=None)
@given(subs=arrays(np.float64, (4, 3, 3, 3), elements=st.floats(0, 1)), seed=st.integers(0, 99))
def test_order_invariance(subs, seed):
    perm = np.random.default_rng(seed).permutation(4)
    for crf in ("identity", "gamma"):
        cfg = SynthesisConfig(n_subframes=4, crf=crf)
        assert np.allclose(synthesize_blur(subs, cfg), synthesize_blur(subs[perm], cfg),
                           atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(subs=unit_imgs)
def test_brightness_conservation(subs):
    blur = synthesize_blur(subs, IDENT)
    assert abs(blur.mean() - np.mean([s.mean() for s in subs])) < 1e-6


def test_noise_statistics():
    cfg = SynthesisConfig(n_subframes=1, crf="identity", noise_sigma=0.02, seed=3)
    clean = np.full((1, 3, 600, 600), 0.5)  # 1.08e6 px, far from the clamp
    noisy = synthesize_blur(clean, cfg)
    std = np.std(noisy - clean[0])
    assert abs(std - 0.02) / 0.02 < 0.05


@pytest.mark.parametrize("n,idx", [(7, 3), (8, 3), (1, 0)])
def test_center_index(n, idx):
    assert center_index(n) == idx
    subs = np.arange(n, dtype=float)[:, None]
    assert select_center_sharp(subs)[0] == idx


def test_center_ceil_mode():
    assert center_index(8, "ceil") == 4
    assert center_index(7, "ceil") == 3


def test_center_of_empty():
    with pytest.raises(ShapeError):
        select_center_sharp(np.zeros((0, 3, 2, 2)))


def test_window_count():
    assert window_count(100, 8, 8) == 12
    assert window_count(7, 8, 8) == 0
    assert window_count(8, 8, 1) == 1


def test_n1_identity(rng):
    frames = rng.random((5, 3, 4, 4)).astype(np.float32)
    for crf in ("identity", "gamma"):
        cfg = SynthesisConfig(n_subframes=1, crf=crf)
        blur, sharp = synthesize_sequence(frames, cfg)
        assert np.allclose(blur, frames, atol=1e-6)
        assert np.array_equal(sharp, frames)


def test_sequence_pairs(rng):
    frames = rng.random((100, 3, 8, 8))
    blur, sharp = synthesize_sequence(frames, SynthesisConfig(n_subframes=8, stride=8))
    assert blur.shape == sharp.shape == (12, 3, 8, 8)
    assert np.allclose(sharp[1], frames[8 + 3])


def test_assign_splits():
    names = [f"s{i}" for i in range(10)]
    out = assign_splits(names, {"train": 0.6, "val": 0.2, "test": 0.2})
    counts = {k: list(out.values()).count(k) for k in ("train", "val", "test")}
    assert counts == {"train": 6, "val": 2, "test": 2}
    explicit = assign_splits(names, {"test": ["s3"], "train": 1.0})
    assert explicit["s3"] == "test" and list(explicit.values()).count("train") == 9


def test_build_dataset_layout_and_manifest(tmp_path, rng):
    src = tmp_path / "hfps"
    for i, n in enumerate((20, 5)):
        write_frames(src / f"seq{i}", rng.random((n, 3, 8, 12)))
    cfg = SynthesisConfig(n_subframes=8)
    manifest = build_dataset(src, tmp_path / "ds", cfg, {"train": 1.0})
    assert [s.name for s in manifest.sequences] == ["seq0"]
    assert manifest.skipped and manifest.skipped[0]["name"] == "seq1"
    assert manifest.resolution == (12, 8)
    seq_dir = tmp_path / "ds" / "train" / "seq0"
    assert sorted(p.name for p in (seq_dir / "blur").iterdir()) == ["00000000.png", "00000001.png"]
    assert read_frames(seq_dir / "sharp").shape == (2, 3, 8, 12)
    manifest.validate(tmp_path / "ds")
    loaded = DatasetManifest.load(tmp_path / "ds")
    assert loaded == manifest
    assert DatasetManifest.from_dict(json.loads(json.dumps(loaded.to_dict()))) == manifest


def test_short_sequence_warns(tmp_path, rng, caplog):
    with caplog.at_level(logging.WARNING):
        m = build_dataset_from_arrays([("short", rng.random((3, 3, 8, 8)))], tmp_path,
                                      SynthesisConfig(n_subframes=8))
    assert m.skipped and "short" in caplog.text


def test_validate_detects_missing_file(tmp_path, rng):
    m = build_dataset_from_arrays([("a", rng.random((16, 3, 8, 8)))], tmp_path,
                                  SynthesisConfig(n_subframes=8))
    (tmp_path / "train" / "a" / "sharp" / "00000001.png").unlink()
    with pytest.raises(EstrnnError, match="train/a"):
        m.validate(tmp_path)


def test_noise_reproducible_per_sequence(rng):
    frames = rng.random((16, 3, 8, 8))
    cfg = SynthesisConfig(n_subframes=8, noise_sigma=0.01, seed=4)
    a, _ = synthesize_sequence(frames, cfg, "x")
    b, _ = synthesize_sequence(frames, cfg, "x")
    c, _ = synthesize_sequence(frames, cfg, "y")
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_png_round_trip_8bit(tmp_path):
    frames = np.round(np.random.default_rng(0).random((2, 3, 5, 7)) * 255) / 255
    write_frames(tmp_path, frames)
    assert np.allclose(read_frames(tmp_path), frames, atol=1e-7)


def test_load_split_pairs(tmp_path, rng):
    build_dataset_from_arrays([("a", rng.random((16, 3, 8, 8)))], tmp_path,
                              SynthesisConfig(n_subframes=8))
    (pair,) = load_split(tmp_path, "train")
    assert pair.name == "a" and pair.blur.shape == (2, 3, 8, 8)
    with pytest.raises(FileNotFoundError):
        load_split(tmp_path, "test")
