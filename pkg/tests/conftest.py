import sys

import numpy as np
import pytest
import torch

from estrnn.config import ModelConfig, SynthesisConfig
from estrnn.io import SequencePair
from estrnn.synthesis import synthesize_sequence
from estrnn.toy import render_clip

torch.set_num_threads(1)


@pytest.fixture
def small_cfg():
    return ModelConfig(n_blocks=2, n_channels=8, growth_rate=4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def toy_pairs(n_seq=2, n_frames=96, size=32, n_sub=8, seed=0):
    cfg = SynthesisConfig(n_subframes=n_sub)
    out = []
    for i in range(n_seq):
        frames = render_clip(n_frames, size, size, seed=seed + i)
        blur, sharp = synthesize_sequence(frames, cfg, f"toy{i:02d}")
        out.append(SequencePair(f"toy{i:02d}", blur, sharp))
    return out


@pytest.fixture
def toy_dataset():
    return toy_pairs()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
