"""Data model, manifest I/O, validation, and splitting for multi-view clip
corpora.

A corpus is a list of clips; each clip has N views (exactly one ego), a
ground-truth narration, and per-view features, camera extrinsics, and one
predicted caption per captioner. The manifest format is JSON lines with a
header line declaring the captioner ids and feature dimension.

Extrinsics use the world-to-camera convention: x_cam = R @ x_world + t,
so the camera center in world coordinates is c = -R.T @ t.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np

ROTATION_TOL = 1e-6


class CorpusError(ValueError):
    """Raised for malformed manifests or invariant violations."""


@dataclass(frozen=True)
class CameraExtrinsics:
    """World-to-camera rigid transform."""

    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self) -> None:
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3):
            raise CorpusError(f"rotation shape {r.shape}, expected (3, 3)")
        if t.shape != (3,):
            raise CorpusError(f"translation shape {t.shape}, expected (3,)")
        if not (np.isfinite(r).all() and np.isfinite(t).all()):
            raise CorpusError("non-finite extrinsics")
        if np.abs(r @ r.T - np.eye(3)).max() > ROTATION_TOL:
            raise CorpusError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > ROTATION_TOL:
            raise CorpusError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        r.setflags(write=False)
        t.setflags(write=False)

    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class ViewRecord:
    """One camera's feature, extrinsics, and per-captioner captions."""

    view_id: str
    is_ego: bool
    feature: np.ndarray  # (F_dim,)
    extrinsics: CameraExtrinsics
    captions: dict[str, str]

    def __post_init__(self) -> None:
        f = np.asarray(self.feature, dtype=float)
        if f.ndim != 1:
            raise CorpusError(f"view {self.view_id}: feature must be 1-d")
        if not np.isfinite(f).all():
            raise CorpusError(f"view {self.view_id}: non-finite feature")
        object.__setattr__(self, "feature", f)
        f.setflags(write=False)


@dataclass(frozen=True)
class Clip:
    """A multi-view clip with its view-agnostic ground-truth narration."""

    clip_id: str
    views: tuple[ViewRecord, ...]
    narration: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "views", tuple(self.views))
        if len(self.views) < 2:
            raise CorpusError(f"clip {self.clip_id}: needs at least 2 views")
        ids = [v.view_id for v in self.views]
        if len(set(ids)) != len(ids):
            raise CorpusError(f"clip {self.clip_id}: duplicate view_ids")
        ego = sum(v.is_ego for v in self.views)
        if ego != 1:
            kind = "multiple" if ego > 1 else "no"
            raise CorpusError(f"clip {self.clip_id}: {kind} ego views")

    @property
    def n_views(self) -> int:
        return len(self.views)

    def ego_index(self) -> int:
        return next(i for i, v in enumerate(self.views) if v.is_ego)

    def exo_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.views) if not v.is_ego]


SplitTag = Literal["train", "val", "test"]


@dataclass(frozen=True)
class Corpus:
    """A validated set of clips sharing view count, captioners, and F_dim."""

    clips: tuple[Clip, ...]
    captioner_ids: tuple[str, ...]
    f_dim: int
    split_tag: SplitTag | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "clips", tuple(self.clips))
        object.__setattr__(self, "captioner_ids", tuple(self.captioner_ids))
        if not self.captioner_ids:
            raise CorpusError("captioner_ids must be non-empty")
        if len(set(self.captioner_ids)) != len(self.captioner_ids):
            raise CorpusError("duplicate captioner_ids")
        if self.f_dim < 1:
            raise CorpusError("f_dim must be positive")
        ids = [c.clip_id for c in self.clips]
        if len(set(ids)) != len(ids):
            raise CorpusError("duplicate clip_ids")
        n_views = {c.n_views for c in self.clips}
        if len(n_views) > 1:
            raise CorpusError(f"view count varies across clips: {sorted(n_views)}")
        for clip in self.clips:
            for v in clip.views:
                if v.feature.shape != (self.f_dim,):
                    raise CorpusError(
                        f"clip {clip.clip_id} view {v.view_id}: feature "
                        f"length {v.feature.shape[0]} != f_dim {self.f_dim}"
                    )
                missing = set(self.captioner_ids) - set(v.captions)
                if missing:
                    raise CorpusError(
                        f"clip {clip.clip_id} view {v.view_id}: missing "
                        f"captions for {sorted(missing)}"
                    )

    def __len__(self) -> int:
        return len(self.clips)

    def __iter__(self) -> Iterator[Clip]:
        return iter(self.clips)

    @property
    def n_views(self) -> int:
        if not self.clips:
            raise CorpusError("empty corpus has no view count")
        return self.clips[0].n_views

    def clip(self, clip_id: str) -> Clip:
        for c in self.clips:
            if c.clip_id == clip_id:
                return c
        raise KeyError(clip_id)

    def narrations(self) -> list[str]:
        return [c.narration for c in self.clips]


def _clip_from_obj(obj: dict) -> Clip:
    views = []
    for v in obj["views"]:
        ext = v["extrinsics"]
        r = np.asarray(ext["R"], dtype=float)
        if r.shape != (9,):
            raise CorpusError(
                f"view {v.get('view_id')}: R must be 9 row-major values"
            )
        try:
            extr = CameraExtrinsics(
                rotation=r.reshape(3, 3),
                translation=np.asarray(ext["t"], dtype=float),
            )
        except CorpusError as exc:
            raise CorpusError(f"view {v.get('view_id')}: {exc}") from exc
        views.append(
            ViewRecord(
                view_id=v["view_id"],
                is_ego=bool(v["is_ego"]),
                feature=np.asarray(v["feature"], dtype=float),
                extrinsics=extr,
                captions=dict(v["captions"]),
            )
        )
    return Clip(clip_id=obj["clip_id"], views=tuple(views), narration=obj["narration"])


def load_manifest(path: str) -> Corpus:
    """Read a JSON-lines manifest: header line, then one clip per line."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise CorpusError(f"{path}: empty manifest")

    def parse(lineno: int, text: str) -> dict:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}:{lineno}: parse error: {exc}") from exc
        if not isinstance(obj, dict):
            raise CorpusError(f"{path}:{lineno}: expected a JSON object")
        return obj

    header = parse(1, lines[0])
    if "captioner_ids" not in header or "f_dim" not in header:
        raise CorpusError(f"{path}:1: header needs captioner_ids and f_dim")
    captioner_ids = tuple(header["captioner_ids"])
    f_dim = int(header["f_dim"])

    clips = []
    for lineno, line in enumerate(lines[1:], start=2):
        obj = parse(lineno, line)
        try:
            clips.append(_clip_from_obj(obj))
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"{path}:{lineno}: missing field {exc}") from exc
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    tag = header.get("split_tag")
    return Corpus(
        clips=tuple(clips), captioner_ids=captioner_ids, f_dim=f_dim, split_tag=tag
    )


def save_manifest(corpus: Corpus, path: str) -> None:
    """Write the JSON-lines manifest; floats use repr round-trip precision."""
    header: dict = {
        "captioner_ids": list(corpus.captioner_ids),
        "f_dim": corpus.f_dim,
    }
    if corpus.split_tag is not None:
        header["split_tag"] = corpus.split_tag
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for clip in corpus.clips:
            obj = {
                "clip_id": clip.clip_id,
                "narration": clip.narration,
                "views": [
                    {
                        "view_id": v.view_id,
                        "is_ego": v.is_ego,
                        "feature": v.feature.tolist(),
                        "extrinsics": {
                            "R": v.extrinsics.rotation.reshape(9).tolist(),
                            "t": v.extrinsics.translation.tolist(),
                        },
                        "captions": dict(v.captions),
                    }
                    for v in clip.views
                ],
            }
            fh.write(json.dumps(obj) + "\n")


def split_corpus(
    corpus: Corpus, fractions: tuple[float, float, float], seed: int
) -> tuple[Corpus, Corpus, Corpus]:
    """Deterministic disjoint train/val/test split.

    Sizes are floor(fraction * n) with the remainder assigned to train.
    """
    if not corpus.clips:
        raise CorpusError("cannot split an empty corpus")
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise CorpusError("fractions must be 3 positive values")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise CorpusError(f"fractions sum to {sum(fractions)}, expected 1")

    n = len(corpus.clips)
    n_val = int(n * fractions[1])
    n_test = int(n * fractions[2])
    n_train = n - n_val - n_test

    order = np.random.default_rng(seed).permutation(n)
    shuffled = [corpus.clips[i] for i in order]

    def sub(clips: list[Clip], tag: SplitTag) -> Corpus:
        return Corpus(
            clips=tuple(clips),
            captioner_ids=corpus.captioner_ids,
            f_dim=corpus.f_dim,
            split_tag=tag,
        )

    return (
        sub(shuffled[:n_train], "train"),
        sub(shuffled[n_train : n_train + n_val], "val"),
        sub(shuffled[n_train + n_val :], "test"),
    )
