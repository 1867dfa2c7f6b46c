import hashlib
import json

import numpy as np
import pytest

from estrnn.cli import main
from estrnn.config import ModelConfig, load_resolved, parse_config
from estrnn.io import write_frames
from estrnn.model import ESTRNN
from estrnn.model.paramset import save_model

SMALL = ["--set", "model.n_blocks=1", "--set", "model.n_channels=8", "--set", "model.growth_rate=4"]


def _err(capsys):
    line = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(line)


def _tree_digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@pytest.fixture
def toy_root(tmp_path):
    out = tmp_path / "data"
    assert main(["synthesize", "--toy", "3", "--toy-size", "32x32", "--splits",
                 "train=0.34,val=0.33,test=0.33", "-o", str(out)]) == 0
    return out


@pytest.fixture
def params_file(tmp_path):
    path = tmp_path / "m.params"
    save_model(ESTRNN(ModelConfig(n_blocks=1, n_channels=8, growth_rate=4)), path)
    return path


def test_profile_csv(tmp_path, capsys):
    assert main(["profile", "--arch", "B9C80", "--resolution", "1280x720", "-o", str(tmp_path)]) == 0
    text = (tmp_path / "cost_B9C80-F2P2.csv").read_text()
    total = text.strip().splitlines()[-1].split(",")
    assert total[0] == "total" and int(total[2]) > 1e11
    assert (tmp_path / "scatter.csv").exists() and (tmp_path / "efficiency.png").exists()
    assert json.loads((tmp_path / "config.resolved.json").read_text())["model"]["n_channels"] == 80


def test_deblur_too_short(tmp_path, params_file, capsys):
    seq = tmp_path / "seq"
    write_frames(seq, np.random.default_rng(0).random((4, 3, 16, 16)))
    code = main(["deblur", "--checkpoint", str(params_file), "--input", str(seq),
                 "-o", str(tmp_path / "out")])
    assert code != 0
    err = _err(capsys)
    assert "5" in err["message"]


def test_deblur_mirrors_layout_and_keeps_inputs(tmp_path, toy_root, params_file):
    before = _tree_digest(toy_root)
    out = tmp_path / "out"
    assert main(["deblur", "--checkpoint", str(params_file), "--input", str(toy_root),
                 "--split", "test", "-o", str(out)]) == 0
    frames = sorted(p.name for p in (out / "test" / "toy002" / "deblur").iterdir())
    assert frames == [f"{i:08d}.png" for i in range(2, 10)]
    assert _tree_digest(toy_root) == before


def test_synthesize_window_count(tmp_path, capsys):
    src = tmp_path / "hfps" / "clip"
    write_frames(src, np.random.default_rng(0).random((100, 3, 8, 8)))
    out = tmp_path / "ds"
    assert main(["synthesize", "--input", str(src.parent), "--n", "8", "--stride", "8",
                 "-o", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["pairs"] == {"clip": 12}
    assert len(list((out / "train" / "clip" / "blur").iterdir())) == 12


def test_empty_config_defaults(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text("")
    cfg = parse_config(cfg_file)
    assert cfg.model.variant == "B9C80" and cfg.model.frames_name == "F2P2"
    assert (cfg.train.recipe, cfg.train.epochs, cfg.train.lr0) == ("synthetic", 500, 1e-4)


def test_invariant_violation_exit_2(tmp_path, capsys):
    code = main(["profile", "--set", "model.use_fusion=false", "--set", "model.use_gsa=true",
                 "-o", str(tmp_path)])
    assert code == 2
    assert _err(capsys)["key"] == "model.use_gsa"


def test_unknown_key_lists_valid_keys(tmp_path, capsys):
    assert main(["profile", "--set", "model.depth=3", "-o", str(tmp_path)]) == 2
    err = _err(capsys)
    assert err["key"] == "model.depth" and "n_blocks" in err["message"]


def test_type_mismatch_names_field(tmp_path, capsys):
    assert main(["profile", "--set", "model.n_channels=wide", "-o", str(tmp_path)]) == 2
    assert _err(capsys)["key"] == "model.n_channels"


def test_missing_files_exit_3(tmp_path, capsys):
    assert main(["eval", "--checkpoint", str(tmp_path / "none.params"), "--data",
                 str(tmp_path), "-o", str(tmp_path / "o")]) == 3
    assert _err(capsys)["error"] == "missing_file"
    assert main(["profile", "--config", str(tmp_path / "none.json"), "-o", str(tmp_path)]) == 3


def test_usage_error_is_single_json_line(tmp_path, capsys):
    assert main(["profile", "--bogus-flag"]) == 2
    assert _err(capsys)["error"] == "usage"


def test_bad_thread_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ESTRNN_THREADS", "many")
    assert main(["profile", "-o", str(tmp_path)]) == 2
    assert _err(capsys)["key"] == "ESTRNN_THREADS"


def test_config_round_trip(tmp_path):
    first = tmp_path / "a.json"
    first.write_text(json.dumps({"model": {"n_channels": 60, "use_gsa": False},
                                 "train": {"recipe": "bsd"}}))
    cfg = parse_config(first, ["synthesis.noise_sigma=0.01"])
    second = tmp_path / "b.json"
    second.write_text(cfg.to_json())
    assert parse_config(second) == cfg
    assert load_resolved(json.loads(cfg.to_json())) == cfg


def test_overrides_beat_file(tmp_path):
    f = tmp_path / "a.json"
    f.write_text(json.dumps({"model": {"n_channels": 60}}))
    assert parse_config(f, ["model.n_channels=70"]).model.n_channels == 70


def test_train_eval_reproducible(tmp_path, toy_root):
    args = ["--set", "train.recipe=toy", "--set", "train.epochs=2", "--set", "train.patch=32",
            "--set", "train.val_every=1", *SMALL]
    for run in ("r1", "r2"):
        assert main(["train", "--data", str(toy_root), *args, "-o", str(tmp_path / run)]) == 0
    m1 = (tmp_path / "r1" / "metrics.csv").read_bytes()
    assert m1 == (tmp_path / "r2" / "metrics.csv").read_bytes()
    assert len(m1.decode().splitlines()) == 3
    for run in ("r1", "r2"):
        assert main(["eval", "--checkpoint", str(tmp_path / run / "model.params"), "--data",
                     str(toy_root), "-o", str(tmp_path / run / "eval")]) == 0
    e1 = (tmp_path / "r1" / "eval" / "metrics.csv").read_bytes()
    assert e1 == (tmp_path / "r2" / "eval" / "metrics.csv").read_bytes()
    # resume continues from the checkpoint's epoch
    assert main(["train", "--data", str(toy_root), *args, "--set", "train.epochs=3", "--resume",
                 str(tmp_path / "r1" / "checkpoint.pt"), "-o", str(tmp_path / "r3")]) == 0
    assert (tmp_path / "r3" / "metrics.csv").read_text().splitlines()[1].startswith("2,")


def test_profile_reproducible(tmp_path):
    for run in ("a", "b"):
        assert main(["profile", "--arch", "B9C60", "B15C80", "-o", str(tmp_path / run)]) == 0
    for name in ("efficiency.csv", "scatter.csv", "cost_B15C80-F2P2.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep(tmp_path, capsys):
    assert main(["sweep", "--grid", "model.n_channels=60..90:15", "-o", str(tmp_path),
                 "--", "profile"]) == 0
    summary = (tmp_path / "sweep.csv").read_text().splitlines()
    assert summary[0] == "run,exit_code,output" and len(summary) == 4
    eff = (tmp_path / "efficiency.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in eff[1:]] == ["B9C60-F2P2", "B9C75-F2P2", "B9C90-F2P2"]
    assert (tmp_path / "efficiency.png").exists()


def test_profile_checkpoint_with_benchmark(tmp_path, params_file, toy_root):
    assert main(["profile", "--checkpoint", str(params_file), "--benchmark", "--runs", "3",
                 "--warmup", "1", "--resolution", "32x32", "--data", str(toy_root),
                 "-o", str(tmp_path / "p")]) == 0
    row = (tmp_path / "p" / "efficiency.csv").read_text().splitlines()[1].split(",")
    assert row[0].startswith("m:") and all(row[1:])
