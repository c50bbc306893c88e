"""Shared fixtures: small synthetic corpora and a handmade two-view clip."""

from __future__ import annotations

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the one-line acceptance verdicts after the run."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)

from bestview.corpus import CameraExtrinsics, Clip, Corpus, ViewRecord
from bestview.synthgen import SynthConfig, generate
from bestview.textmetrics import default_lexicon


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def synth_small():
    """20 clips, 3 views, mild corruption; (corpus, planted) tuple."""
    cfg = SynthConfig(
        n_clips=20, n_views=3, f_dim=6, n_captioners=3, seed=11,
        corruption_rate=0.3,
    )
    return generate(cfg)


@pytest.fixture(scope="session")
def synth_trainable():
    """A corpus separable enough for quick training runs."""
    cfg = SynthConfig(
        n_clips=48, n_views=3, f_dim=8, n_captioners=2, seed=5,
        corruption_rate=0.8, narration_len=10, feature_snr=50.0,
    )
    return generate(cfg)


def identity_extrinsics(tx: float = 0.0) -> CameraExtrinsics:
    return CameraExtrinsics(
        rotation=np.eye(3), translation=np.array([tx, 0.0, 0.0])
    )


def make_clip(
    clip_id: str = "clip0",
    captions_by_view: tuple[dict[str, str], ...] = (
        {"capA": "c cuts the onion"},
        {"capA": "c cuts the red onion"},
    ),
    narration: str = "c cuts the red onion",
    f_dim: int = 4,
) -> Clip:
    views = tuple(
        ViewRecord(
            view_id=f"v{i}",
            is_ego=(i == 0),
            feature=np.linspace(0.0, 1.0, f_dim) + i,
            extrinsics=identity_extrinsics(float(i)),
            captions=caps,
        )
        for i, caps in enumerate(captions_by_view)
    )
    return Clip(clip_id=clip_id, views=views, narration=narration)


def make_corpus(clips, captioner_ids=("capA",), f_dim: int = 4) -> Corpus:
    return Corpus(clips=tuple(clips), captioner_ids=tuple(captioner_ids), f_dim=f_dim)


def make_rand_batch(
    rng: np.random.Generator, n_clips: int, n_views: int, f_dim: int, beta: int = 30
):
    """Random features, mixed single/double label sets, random pose classes."""
    from bestview.posegeom import head_sizes
    from bestview.selector import Batch

    sizes = head_sizes(beta)
    label_sets = []
    for b in range(n_clips):
        if rng.integers(2):
            label_sets.append((int(rng.integers(n_views)),))
        else:
            pair = rng.choice(n_views, size=min(2, n_views), replace=False)
            label_sets.append(tuple(sorted(int(v) for v in pair)))
    classes = np.stack(
        [rng.integers(s, size=(n_clips, n_views**2)) for s in sizes], axis=2
    )
    return Batch(
        features=rng.normal(size=(n_clips, n_views, f_dim)),
        label_sets=tuple(label_sets),
        pose_classes=classes,
    )
