"""Synthetic multi-view corpora with a planted best view per clip, for
closed-loop validation of the labeling, training, and evaluation stages.

Construction: each clip gets a template-grammar narration and a per-view
quality q_v (1.0 for the planted view, below 1 for the rest). A view's
caption from captioner k is the narration with each token independently
replaced by a junk vocabulary token with probability

    p = clip(corruption_rate * (1 - q_v) * jitter_{v,k}, 0, 1)

where jitter is a small multiplicative per-captioner factor, so the
planted view's captions always equal the narration and corruption_rate 0
leaves every caption untouched. Features are q_v times a fixed unit
signal direction plus isotropic Gaussian noise with standard deviation
1 / feature_snr, which makes the planted view linearly recoverable from
features when feature_snr is high. Cameras sit evenly spaced on a circle
looking inward, with the ego view at the circle center.

The junk vocabulary is disjoint from the narration word pools, so every
replaced token strictly reduces caption/narration overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CameraExtrinsics, Clip, Corpus, ViewRecord

# word pools drawn from the shipped term lexicon so IoU metrics stay
# meaningful on synthetic captions; verbs pluralize with a bare "s"
_VERBS = (
    "cut", "stir", "hold", "lift", "turn", "open", "clean", "peel",
    "fold", "pour", "grab", "tighten", "remove", "insert", "adjust",
)
_NOUNS = (
    "onion", "board", "bowl", "pan", "spoon", "knife", "wheel", "tire",
    "frame", "pedal", "bolt", "lever", "towel", "lid", "jar",
)
_ADJECTIVES = (
    "red", "small", "large", "left", "right", "front", "rear", "new",
    "metal", "wooden",
)

_TEMPLATES = (
    ("c", "VERB", "the", "ADJ", "NOUN"),
    ("c", "VERB", "the", "NOUN", "on", "the", "NOUN"),
    ("c", "VERB", "the", "NOUN", "with", "the", "NOUN"),
    ("c", "VERB", "the", "ADJ", "NOUN", "with", "both", "hands"),
)

_FILLER = ("slowly", "carefully", "again", "briefly", "then", "once")


class SynthError(ValueError):
    """Raised for invalid generator configurations."""


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for corpus generation."""

    n_clips: int = 100
    n_views: int = 3
    f_dim: int = 16
    n_captioners: int = 3
    vocab_size: int = 50
    narration_len: int = 8
    corruption_rate: float = 0.1
    feature_snr: float = 20.0
    seed: int = 0
    camera_radius: float = 2.0
    verbose_captions: bool = False

    def __post_init__(self) -> None:
        if self.n_clips < 1 or self.f_dim < 1 or self.n_captioners < 1:
            raise SynthError("n_clips, f_dim, n_captioners must be positive")
        if self.n_views < 2:
            raise SynthError("n_views must be at least 2")
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise SynthError("corruption_rate must be in [0, 1]")
        if self.vocab_size < 1 or self.narration_len < 1:
            raise SynthError("vocab_size and narration_len must be positive")
        if self.feature_snr <= 0 or self.camera_radius <= 0:
            raise SynthError("feature_snr and camera_radius must be positive")


def _look_at(position: np.ndarray, target: np.ndarray) -> CameraExtrinsics:
    """World-to-camera extrinsics for a camera at `position` whose forward
    (z) axis points at `target`, with world +z as up."""
    forward = target - position
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(up, forward)
    norm = np.linalg.norm(right)
    if norm < 1e-12:  # looking straight up or down
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / norm
    down = np.cross(forward, right)
    rotation = np.stack([right, down, forward])
    return CameraExtrinsics(rotation=rotation, translation=-rotation @ position)


def _camera_ring(n_views: int, radius: float) -> list[CameraExtrinsics]:
    """View 0 at the center, the rest evenly spaced on a circle looking in."""
    center = np.zeros(3)
    cams = [_look_at(center, np.array([radius, 0.0, 0.0]))]
    n_exo = n_views - 1
    for k in range(n_exo):
        angle = 2.0 * np.pi * k / n_exo
        position = radius * np.array([np.cos(angle), np.sin(angle), 0.0])
        cams.append(_look_at(position, center))
    return cams


def _narration(rng: np.random.Generator, target_len: int) -> list[str]:
    template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
    words = []
    for slot in template:
        if slot == "VERB":
            words.append(_VERBS[rng.integers(len(_VERBS))] + "s")
        elif slot == "NOUN":
            words.append(_NOUNS[rng.integers(len(_NOUNS))])
        elif slot == "ADJ":
            words.append(_ADJECTIVES[rng.integers(len(_ADJECTIVES))])
        else:
            words.append(slot)
    while len(words) < target_len:
        words.extend(["with", "the", _NOUNS[rng.integers(len(_NOUNS))]])
    return words


def _junk_token(rng: np.random.Generator, vocab_size: int) -> str:
    return f"x{rng.integers(vocab_size):03d}"


def generate(cfg: SynthConfig) -> tuple[Corpus, dict[str, int]]:
    """Build a corpus and the map from clip_id to its planted best view."""
    corpus_rng = np.random.default_rng([cfg.seed, 0])
    signal = corpus_rng.normal(size=cfg.f_dim)
    signal /= np.linalg.norm(signal)
    cameras = _camera_ring(cfg.n_views, cfg.camera_radius)
    captioner_ids = tuple(f"cap{k}" for k in range(cfg.n_captioners))
    noise_std = 1.0 / cfg.feature_snr

    clips = []
    planted: dict[str, int] = {}
    for m in range(cfg.n_clips):
        rng = np.random.default_rng([cfg.seed, 1, m])
        clip_id = f"clip{m:05d}"
        narration_tokens = _narration(rng, cfg.narration_len)
        best = int(rng.integers(cfg.n_views))
        quality = rng.uniform(0.3, 0.85, size=cfg.n_views)
        quality[best] = 1.0
        verbosity = rng.uniform(size=cfg.n_views)

        views = []
        for v in range(cfg.n_views):
            captions = {}
            for k, cid in enumerate(captioner_ids):
                jitter = rng.uniform(0.8, 1.2)
                p = float(
                    np.clip(cfg.corruption_rate * (1.0 - quality[v]) * jitter, 0, 1)
                )
                tokens = [
                    _junk_token(rng, cfg.vocab_size)
                    if rng.random() < p
                    else t
                    for t in narration_tokens
                ]
                if cfg.verbose_captions:
                    extra = int(round(verbosity[v] * cfg.narration_len))
                    tokens = tokens + [
                        _FILLER[rng.integers(len(_FILLER))] for _ in range(extra)
                    ]
                captions[cid] = " ".join(tokens)
            feature = quality[v] * signal + rng.normal(
                scale=noise_std, size=cfg.f_dim
            )
            views.append(
                ViewRecord(
                    view_id=f"v{v}",
                    is_ego=(v == 0),
                    feature=feature,
                    extrinsics=cameras[v],
                    captions=captions,
                )
            )
        clips.append(
            Clip(clip_id=clip_id, views=tuple(views), narration=" ".join(narration_tokens))
        )
        planted[clip_id] = best
    corpus = Corpus(
        clips=tuple(clips), captioner_ids=captioner_ids, f_dim=cfg.f_dim
    )
    return corpus, planted
