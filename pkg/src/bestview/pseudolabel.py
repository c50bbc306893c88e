"""Best-view pseudo-labeling: score each view's predicted caption against
the ground-truth narration, rank views per captioner, and aggregate the
top-ranked views across captioners into a per-clip label set.

Ranks are dense (1 = best, ties share a rank), so a captioner's top set is
exactly its rank-1 views and is never empty. All consensus policies fall
back to the union of top sets, which keeps label sets non-empty.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .corpus import Clip, Corpus
from .textmetrics import IdfTable, ScoreConfig, build_idf_for_config, tokenize

Policy = Literal["union", "intersection_fallback", "majority"]

POLICIES = ("union", "intersection_fallback", "majority")


class LabelError(ValueError):
    """Raised for inconsistent scoring or aggregation inputs."""


@dataclass(frozen=True)
class ViewScores:
    """One captioner's per-view scores, dense ranks, and rank-1 view set."""

    captioner_id: str
    scores: tuple[float, ...]
    ranks: tuple[int, ...]
    top_set: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if len(self.scores) != len(self.ranks):
            raise LabelError("scores and ranks lengths differ")
        for a in range(len(self.scores)):
            for b in range(len(self.scores)):
                same = self.scores[a] == self.scores[b]
                if same != (self.ranks[a] == self.ranks[b]):
                    raise LabelError("equal scores must share ranks")
                if self.scores[a] > self.scores[b] and not (
                    self.ranks[a] < self.ranks[b]
                ):
                    raise LabelError("higher score must get lower rank")
        expected_top = frozenset(
            i for i, r in enumerate(self.ranks) if r == 1
        )
        if not self.top_set:
            object.__setattr__(self, "top_set", expected_top)
        elif self.top_set != expected_top:
            raise LabelError("top_set inconsistent with ranks")
        if not self.top_set:
            raise LabelError("top_set is empty")


@dataclass(frozen=True)
class PseudoLabelSet:
    """The consensus best-view index set for one clip."""

    clip_id: str
    labels: frozenset[int]
    per_captioner: tuple[ViewScores, ...]
    policy: Policy

    def __post_init__(self) -> None:
        if not self.labels:
            raise LabelError(f"clip {self.clip_id}: empty label set")
        n = len(self.per_captioner[0].scores) if self.per_captioner else None
        if n is not None:
            if any(i < 0 or i >= n for i in self.labels):
                raise LabelError(f"clip {self.clip_id}: label out of range")
            union = frozenset().union(*(vs.top_set for vs in self.per_captioner))
            if not self.labels <= union:
                raise LabelError(
                    f"clip {self.clip_id}: labels outside captioner top sets"
                )


def score_and_rank(
    clip: Clip,
    captioner_id: str,
    idf: IdfTable | None,
    config: ScoreConfig | None = None,
) -> ViewScores:
    """Score every view's caption against the clip narration and rank them."""
    config = config or ScoreConfig()
    reference = tokenize(clip.narration)
    scores = []
    for v in clip.views:
        if captioner_id not in v.captions:
            raise LabelError(
                f"clip {clip.clip_id} view {v.view_id}: no caption "
                f"from {captioner_id!r}"
            )
        candidate = tokenize(v.captions[captioner_id])
        scores.append(config.score(candidate, reference, idf))
    ranks = rankdata([-s for s in scores], method="dense").astype(int)
    return ViewScores(
        captioner_id=captioner_id,
        scores=tuple(scores),
        ranks=tuple(int(r) for r in ranks),
    )


def aggregate_consensus(
    per_captioner: Sequence[ViewScores], policy: Policy
) -> frozenset[int]:
    """Combine per-captioner top-ranked view sets into one label set."""
    if not per_captioner:
        raise LabelError("no captioner scores to aggregate")
    counts = {len(vs.scores) for vs in per_captioner}
    if len(counts) > 1:
        raise LabelError(f"view counts differ across captioners: {sorted(counts)}")
    tops = [vs.top_set for vs in per_captioner]
    union = frozenset().union(*tops)
    if policy == "union":
        return union
    k = len(tops)
    need = (k + 1) // 2
    majority = frozenset(
        v for v in union if sum(v in t for t in tops) >= need
    )
    if policy == "majority":
        return majority or union
    if policy == "intersection_fallback":
        inter = frozenset.intersection(*tops)
        return inter or majority or union
    raise LabelError(f"unknown policy {policy!r}")


def label_clip(
    clip: Clip,
    captioner_ids: Sequence[str],
    idf: IdfTable | None,
    policy: Policy = "union",
    config: ScoreConfig | None = None,
) -> PseudoLabelSet:
    per_captioner = tuple(
        score_and_rank(clip, cid, idf, config) for cid in captioner_ids
    )
    return PseudoLabelSet(
        clip_id=clip.clip_id,
        labels=aggregate_consensus(per_captioner, policy),
        per_captioner=per_captioner,
        policy=policy,
    )


def label_corpus(
    corpus: Corpus,
    config: ScoreConfig | None = None,
    policy: Policy = "union",
    captioner_ids: Sequence[str] | None = None,
) -> dict[str, PseudoLabelSet]:
    """Label every clip; the IDF table is built from the corpus narrations.

    Restricting captioner_ids to a single captioner gives the
    no-aggregation ablation.
    """
    config = config or ScoreConfig()
    captioner_ids = tuple(captioner_ids or corpus.captioner_ids)
    unknown = set(captioner_ids) - set(corpus.captioner_ids)
    if unknown:
        raise LabelError(f"unknown captioner_ids {sorted(unknown)}")
    idf = (
        build_idf_for_config(corpus.narrations(), config)
        if config.metric == "cider"
        else None
    )
    return {
        clip.clip_id: label_clip(clip, captioner_ids, idf, policy, config)
        for clip in corpus
    }


def label_distribution(
    labels: Mapping[str, PseudoLabelSet], n_views: int
) -> np.ndarray:
    """Per-view selection frequencies; each clip spreads weight 1/|labels|
    over its labeled views, so the result sums to 1."""
    if not labels:
        raise LabelError("no labels to summarize")
    freq = np.zeros(n_views)
    for pls in labels.values():
        share = 1.0 / len(pls.labels)
        for v in pls.labels:
            freq[v] += share
    return freq / len(labels)


def save_labels(
    labels: Mapping[str, PseudoLabelSet],
    path: str,
    header: dict | None = None,
) -> None:
    """Write one JSON line per clip, after an optional provenance header."""
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"_config": header}) + "\n")
        for clip_id in sorted(labels):
            pls = labels[clip_id]
            obj = {
                "clip_id": pls.clip_id,
                "labels": sorted(pls.labels),
                "per_captioner": [
                    {
                        "captioner_id": vs.captioner_id,
                        "scores": list(vs.scores),
                        "ranks": list(vs.ranks),
                    }
                    for vs in pls.per_captioner
                ],
            }
            fh.write(json.dumps(obj) + "\n")


def load_labels(path: str) -> dict[str, PseudoLabelSet]:
    """Read a label file; a leading {"_config": ...} header line is skipped
    except for recovering the aggregation policy."""
    labels: dict[str, PseudoLabelSet] = {}
    policy: Policy = "union"
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LabelError(f"{path}:{lineno}: parse error: {exc}") from exc
            if "_config" in obj:
                policy = obj["_config"].get("policy", policy)
                continue
            per_captioner = tuple(
                ViewScores(
                    captioner_id=e["captioner_id"],
                    scores=tuple(float(s) for s in e["scores"]),
                    ranks=tuple(int(r) for r in e["ranks"]),
                )
                for e in obj["per_captioner"]
            )
            pls = PseudoLabelSet(
                clip_id=obj["clip_id"],
                labels=frozenset(int(v) for v in obj["labels"]),
                per_captioner=per_captioner,
                policy=policy,
            )
            labels[pls.clip_id] = pls
    if not labels:
        raise LabelError(f"{path}: no label records")
    return labels
