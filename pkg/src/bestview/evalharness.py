"""Automatic evaluation of view-selection policies: caption metrics over
the selected views, naive and oracle baselines, paired significance
testing, and report rendering.

Reporting convention: CIDEr is the corpus mean of native [0, 10] scores
times 10, METEOR and the term IoUs are means times 100, so identical
captions score 100.0 on every column. Every rendered report states this.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

import numpy as np

from .corpus import Clip, Corpus
from .pseudolabel import score_and_rank
from .textmetrics import (
    IdfTable,
    ScoreConfig,
    TermLexicon,
    build_idf_for_config,
    cider_d,
    default_lexicon,
    extract_terms,
    meteor_lite,
    term_iou,
    tokenize,
)

BaselineKind = Literal[
    "ego_only",
    "random",
    "random_exo",
    "longest_caption",
    "oracle_best",
    "oracle_second",
    "oracle_worst",
]

BASELINES = (
    "ego_only",
    "random",
    "random_exo",
    "longest_caption",
    "oracle_best",
    "oracle_second",
    "oracle_worst",
)

METRICS = ("cider", "meteor", "v_iou", "n_iou", "nc_iou")

_COLUMNS = ("CIDEr", "METEOR", "V-IoU", "N-IoU", "NC-IoU")

CONVENTION_NOTE = "CIDEr = mean[0-10] x10; METEOR and IoUs = mean x100"


class EvalError(ValueError):
    """Raised for incomplete selections or mismatched report pairs."""


@dataclass(frozen=True)
class Selection:
    """A policy's chosen view per clip."""

    policy_name: str
    choices: dict[str, int]

    def view_for(self, clip_id: str) -> int:
        try:
            return self.choices[clip_id]
        except KeyError:
            raise EvalError(
                f"{self.policy_name}: no selection for clip {clip_id}"
            ) from None


@dataclass(frozen=True)
class MetricReport:
    """Corpus-mean metric values plus per-clip scores for significance."""

    policy_name: str
    clip_ids: tuple[str, ...]
    per_clip: dict[str, np.ndarray]  # metric name -> native per-clip scores

    def __post_init__(self) -> None:
        for name in METRICS:
            if name not in self.per_clip:
                raise EvalError(f"missing per-clip scores for {name}")
            arr = np.asarray(self.per_clip[name], dtype=float)
            if arr.shape != (len(self.clip_ids),):
                raise EvalError(f"{name}: per-clip length mismatch")
            self.per_clip[name] = arr

    def mean(self, metric: str) -> float:
        """Reported value: native mean scaled to the percent convention."""
        scale = 10.0 if metric == "cider" else 100.0
        return float(np.mean(self.per_clip[metric])) * scale

    def means(self) -> dict[str, float]:
        return {m: self.mean(m) for m in METRICS}


def baseline_select(
    corpus: Corpus,
    kind: BaselineKind,
    seed: int = 0,
    eval_captioner_id: str | None = None,
    idf: IdfTable | None = None,
    config: ScoreConfig | None = None,
) -> Selection:
    """Selections for the non-detector baselines and rank oracles.

    The oracles order views by their caption score against the narration
    (descending, ties to the lower view index) and pick the view at rank
    1, 2, or N. The scoring IDF table defaults to one built from this
    corpus's narrations.
    """
    if kind not in BASELINES:
        raise EvalError(f"unknown baseline {kind!r}")
    captioner = eval_captioner_id or corpus.captioner_ids[0]
    config = config or ScoreConfig()
    if kind.startswith("oracle") and idf is None and config.metric == "cider":
        idf = build_idf_for_config(corpus.narrations(), config)
    rng = np.random.default_rng(seed)
    choices: dict[str, int] = {}
    for clip in corpus:
        if kind == "ego_only":
            choices[clip.clip_id] = clip.ego_index()
        elif kind == "random":
            choices[clip.clip_id] = int(rng.integers(clip.n_views))
        elif kind == "random_exo":
            exo = clip.exo_indices()
            if not exo:
                raise EvalError(f"clip {clip.clip_id}: no exo views")
            choices[clip.clip_id] = int(exo[rng.integers(len(exo))])
        elif kind == "longest_caption":
            lengths = [
                len(tokenize(v.captions[captioner])) for v in clip.views
            ]
            choices[clip.clip_id] = int(np.argmax(lengths))
        else:
            scores = score_and_rank(clip, captioner, idf, config).scores
            order = np.argsort(-np.asarray(scores), kind="stable")
            position = {"oracle_best": 0, "oracle_second": 1, "oracle_worst": -1}
            choices[clip.clip_id] = int(order[position[kind]])
    return Selection(policy_name=kind, choices=choices)


def selection_from_params(params, corpus: Corpus, name: str = "selector") -> Selection:
    """Wrap a trained selector as a Selection policy."""
    from .selector import select

    return Selection(
        policy_name=name,
        choices={clip.clip_id: select(params, clip)[0] for clip in corpus},
    )


def evaluate(
    selection: Selection,
    corpus: Corpus,
    eval_captioner_id: str | None = None,
    idf: IdfTable | None = None,
    lexicon: TermLexicon | None = None,
    config: ScoreConfig | None = None,
) -> MetricReport:
    """Score each clip's selected caption against the narration with all
    five metrics."""
    if len(corpus) == 0:
        raise EvalError("empty corpus")
    captioner = eval_captioner_id or corpus.captioner_ids[0]
    config = config or ScoreConfig()
    if idf is None:
        idf = build_idf_for_config(corpus.narrations(), config)
    lexicon = lexicon or default_lexicon()

    clip_ids = []
    per_clip: dict[str, list[float]] = {m: [] for m in METRICS}
    for clip in corpus:
        view = selection.view_for(clip.clip_id)
        if not 0 <= view < clip.n_views:
            raise EvalError(
                f"{selection.policy_name}: view {view} out of range for "
                f"clip {clip.clip_id}"
            )
        record = clip.views[view]
        if captioner not in record.captions:
            raise EvalError(
                f"clip {clip.clip_id} view {record.view_id}: no caption "
                f"from {captioner!r}"
            )
        candidate = tokenize(record.captions[captioner])
        reference = tokenize(clip.narration)
        per_clip["cider"].append(
            cider_d(config.prepare(candidate), config.prepare(reference), idf)
        )
        per_clip["meteor"].append(meteor_lite(candidate, reference))
        for metric, kind in (
            ("v_iou", "verb"),
            ("n_iou", "noun"),
            ("nc_iou", "noun_chunk"),
        ):
            per_clip[metric].append(
                term_iou(
                    extract_terms(candidate, kind, lexicon),
                    extract_terms(reference, kind, lexicon),
                )
            )
        clip_ids.append(clip.clip_id)
    return MetricReport(
        policy_name=selection.policy_name,
        clip_ids=tuple(clip_ids),
        per_clip={m: np.array(v) for m, v in per_clip.items()},
    )


def permutation_test(
    a: MetricReport,
    b: MetricReport,
    metric: str = "cider",
    iterations: int = 10_000,
    seed: int = 0,
) -> float:
    """Two-sided paired sign-flip permutation test on per-clip differences.

    p = (1 + #{|permuted mean| >= |observed mean|}) / (1 + iterations).
    """
    if metric not in METRICS:
        raise EvalError(f"unknown metric {metric!r}")
    if a.clip_ids != b.clip_ids:
        raise EvalError("reports cover different clips or orderings")
    if iterations < 1:
        raise EvalError("iterations must be positive")
    diffs = a.per_clip[metric] - b.per_clip[metric]
    observed = abs(float(np.mean(diffs)))
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(iterations, diffs.size)) * 2 - 1
    permuted = np.abs(signs @ diffs) / diffs.size
    count = int(np.sum(permuted >= observed))
    return (1 + count) / (1 + iterations)


def save_selection(selection: Selection, path: str, header: dict | None = None) -> None:
    """JSON lines: optional {"_config": ...} then {"clip_id", "view"} rows."""
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"_config": header}) + "\n")
        fh.write(json.dumps({"policy_name": selection.policy_name}) + "\n")
        for clip_id in sorted(selection.choices):
            fh.write(
                json.dumps({"clip_id": clip_id, "view": selection.choices[clip_id]})
                + "\n"
            )


def load_selection(path: str) -> Selection:
    policy_name = "selection"
    choices: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if "_config" in obj:
                continue
            if "policy_name" in obj and "clip_id" not in obj:
                policy_name = obj["policy_name"]
                continue
            choices[obj["clip_id"]] = int(obj["view"])
    if not choices:
        raise EvalError(f"{path}: no selections")
    return Selection(policy_name=policy_name, choices=choices)


def save_report_scores(
    report: MetricReport, path: str, header: dict | None = None
) -> None:
    """Full per-clip scores as JSON, for later merging and significance."""
    obj = {
        "policy_name": report.policy_name,
        "convention": CONVENTION_NOTE,
        "clip_ids": list(report.clip_ids),
        "per_clip": {m: report.per_clip[m].tolist() for m in METRICS},
        "means": report.means(),
    }
    if header is not None:
        obj["_config"] = header
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_report_scores(path: str) -> MetricReport:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return MetricReport(
        policy_name=obj["policy_name"],
        clip_ids=tuple(obj["clip_ids"]),
        per_clip={m: np.array(obj["per_clip"][m]) for m in METRICS},
    )


def render_report(
    reports: Sequence[MetricReport],
    fmt: Literal["text", "csv", "json"] = "text",
) -> str:
    """One row per policy, metric columns to one decimal place."""
    if not reports:
        raise EvalError("no reports to render")
    rows = [
        (r.policy_name, [round(r.mean(m), 1) for m in METRICS]) for r in reports
    ]
    if fmt == "json":
        return json.dumps(
            {
                "convention": CONVENTION_NOTE,
                "policies": [
                    {"policy": name, **dict(zip(_COLUMNS, values))}
                    for name, values in rows
                ],
            },
            indent=2,
        )
    if fmt == "csv":
        out = io.StringIO()
        out.write("policy," + ",".join(_COLUMNS) + "\n")
        for name, values in rows:
            out.write(name + "," + ",".join(f"{v:.1f}" for v in values) + "\n")
        return out.getvalue()
    if fmt == "text":
        width = max(len("policy"), *(len(name) for name, _ in rows))
        lines = [f"# {CONVENTION_NOTE}"]
        header = "policy".ljust(width) + "".join(c.rjust(9) for c in _COLUMNS)
        lines.append(header)
        lines.append("-" * len(header))
        for name, values in rows:
            lines.append(
                name.ljust(width) + "".join(f"{v:9.1f}" for v in values)
            )
        return "\n".join(lines) + "\n"
    raise EvalError(f"unknown format {fmt!r}")
