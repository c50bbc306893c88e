"""Trainable view selector: a view-classification branch and an auxiliary
relative-pose branch over per-view feature vectors, trained jointly with
explicit analytic gradients.

Architecture (all weights plain numpy arrays):

  view branch:  f_n --affine--> h_n; concat over views --two-layer tanh
                head--> N logits
  pose branch:  f_i, f_j --affine--> h_i, h_j; concat --two-layer tanh
                head--> one logit block per pose head

Losses:

  view loss   = min over pseudo-labels b of CE(softmax(logits), b)
  pose loss   = mean over all N^2 ordered view pairs of the mean
                cross-entropy across the pose heads
  total loss  = view loss + w * pose loss

The min makes the view loss attach to whichever pseudo-label is currently
easiest to predict; its gradient flows only through that label (ties broken
toward the lowest view index). Training is plain mini-batch gradient
descent, deterministic per seed, with early stopping on validation loss.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .corpus import Clip, Corpus
from .posegeom import PoseLabelTable, head_sizes
from .pseudolabel import PseudoLabelSet

CHECKPOINT_VERSION = 1

LabelMode = Literal["min", "random_single"]


class SelectorError(ValueError):
    """Raised for dimension mismatches, empty inputs, or divergence."""


_ARRAY_FIELDS = (
    "proj_w_weight",
    "proj_w_bias",
    "head_w1_weight",
    "head_w1_bias",
    "head_w2_weight",
    "head_w2_bias",
    "proj_p_weight",
    "proj_p_bias",
    "head_p1_weight",
    "head_p1_bias",
    "head_p2_weight",
    "head_p2_bias",
)


@dataclass
class SelectorParams:
    """All selector weights plus the dimensions they were built for."""

    f_dim: int
    h_dim: int
    n_views: int
    beta_deg: int
    proj_w_weight: np.ndarray  # (h_dim, f_dim)
    proj_w_bias: np.ndarray  # (h_dim,)
    head_w1_weight: np.ndarray  # (h_dim, n_views * h_dim)
    head_w1_bias: np.ndarray  # (h_dim,)
    head_w2_weight: np.ndarray  # (n_views, h_dim)
    head_w2_bias: np.ndarray  # (n_views,)
    proj_p_weight: np.ndarray  # (h_dim, f_dim)
    proj_p_bias: np.ndarray  # (h_dim,)
    head_p1_weight: np.ndarray  # (h_dim, 2 * h_dim)
    head_p1_bias: np.ndarray  # (h_dim,)
    head_p2_weight: np.ndarray  # (n_classes, h_dim)
    head_p2_bias: np.ndarray  # (n_classes,)

    def __post_init__(self) -> None:
        sizes = head_sizes(self.beta_deg)
        n_classes = sum(sizes)
        expected = {
            "proj_w_weight": (self.h_dim, self.f_dim),
            "proj_w_bias": (self.h_dim,),
            "head_w1_weight": (self.h_dim, self.n_views * self.h_dim),
            "head_w1_bias": (self.h_dim,),
            "head_w2_weight": (self.n_views, self.h_dim),
            "head_w2_bias": (self.n_views,),
            "proj_p_weight": (self.h_dim, self.f_dim),
            "proj_p_bias": (self.h_dim,),
            "head_p1_weight": (self.h_dim, 2 * self.h_dim),
            "head_p1_bias": (self.h_dim,),
            "head_p2_weight": (n_classes, self.h_dim),
            "head_p2_bias": (n_classes,),
        }
        for name, shape in expected.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise SelectorError(
                    f"{name} has shape {arr.shape}, expected {shape}"
                )
            if not np.isfinite(arr).all():
                raise SelectorError(f"{name} contains non-finite values")
            setattr(self, name, arr)

    @property
    def pose_head_sizes(self) -> tuple[int, ...]:
        return head_sizes(self.beta_deg)

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in _ARRAY_FIELDS]

    def copy(self) -> "SelectorParams":
        return replace(self, **{n: getattr(self, n).copy() for n in _ARRAY_FIELDS})

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, flat: np.ndarray) -> "SelectorParams":
        parts = {}
        offset = 0
        for name in _ARRAY_FIELDS:
            shape = getattr(self, name).shape
            size = int(np.prod(shape))
            parts[name] = flat[offset : offset + size].reshape(shape).copy()
            offset += size
        if offset != flat.size:
            raise SelectorError(f"flat vector has {flat.size} values, need {offset}")
        return replace(self, **parts)


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_out, fan_in))


def init_params(
    f_dim: int, h_dim: int, n_views: int, beta_deg: int, seed: int
) -> SelectorParams:
    """Seeded uniform Glorot weights, zero biases."""
    rng = np.random.default_rng([seed, 0x5E1EC])
    n_classes = sum(head_sizes(beta_deg))
    return SelectorParams(
        f_dim=f_dim,
        h_dim=h_dim,
        n_views=n_views,
        beta_deg=beta_deg,
        proj_w_weight=_glorot(rng, h_dim, f_dim),
        proj_w_bias=np.zeros(h_dim),
        head_w1_weight=_glorot(rng, h_dim, n_views * h_dim),
        head_w1_bias=np.zeros(h_dim),
        head_w2_weight=_glorot(rng, n_views, h_dim),
        head_w2_bias=np.zeros(n_views),
        proj_p_weight=_glorot(rng, h_dim, f_dim),
        proj_p_bias=np.zeros(h_dim),
        head_p1_weight=_glorot(rng, h_dim, 2 * h_dim),
        head_p1_bias=np.zeros(h_dim),
        head_p2_weight=_glorot(rng, n_classes, h_dim),
        head_p2_bias=np.zeros(n_classes),
    )


def clip_features(clip: Clip) -> np.ndarray:
    return np.stack([v.feature for v in clip.views])


def forward_view(params: SelectorParams, features: np.ndarray) -> np.ndarray:
    """Per-clip view logits, shape (n_views,)."""
    features = np.asarray(features, dtype=float)
    if features.shape != (params.n_views, params.f_dim):
        raise SelectorError(
            f"features shape {features.shape}, expected "
            f"{(params.n_views, params.f_dim)}"
        )
    h = features @ params.proj_w_weight.T + params.proj_w_bias
    z = h.reshape(-1)
    u = np.tanh(params.head_w1_weight @ z + params.head_w1_bias)
    return params.head_w2_weight @ u + params.head_w2_bias


def forward_pose(
    params: SelectorParams, f_i: np.ndarray, f_j: np.ndarray
) -> list[np.ndarray]:
    """Logit blocks for one ordered view pair, one block per pose head."""
    f_i = np.asarray(f_i, dtype=float)
    f_j = np.asarray(f_j, dtype=float)
    if f_i.shape != (params.f_dim,) or f_j.shape != (params.f_dim,):
        raise SelectorError("pose features must have length f_dim")
    h_i = params.proj_p_weight @ f_i + params.proj_p_bias
    h_j = params.proj_p_weight @ f_j + params.proj_p_bias
    z = np.concatenate([h_i, h_j])
    u = np.tanh(params.head_p1_weight @ z + params.head_p1_bias)
    logits = params.head_p2_weight @ u + params.head_p2_bias
    return split_heads(logits, params.pose_head_sizes)


def split_heads(
    logits: np.ndarray, sizes: Sequence[int]
) -> list[np.ndarray]:
    return np.split(np.asarray(logits, dtype=float), np.cumsum(sizes)[:-1])


def _label_indices(labels: PseudoLabelSet | Iterable[int]) -> list[int]:
    if isinstance(labels, PseudoLabelSet):
        return sorted(labels.labels)
    out = sorted(int(i) for i in labels)
    if not out:
        raise SelectorError("empty label set")
    return out


def loss_view(
    logits: np.ndarray, labels: PseudoLabelSet | Iterable[int]
) -> float:
    """Minimum cross-entropy over the pseudo-label set, natural log."""
    logits = np.asarray(logits, dtype=float)
    idx = _label_indices(labels)
    if max(idx) >= logits.shape[0]:
        raise SelectorError("label index outside logit range")
    lse = logsumexp(logits)
    return float(min(lse - logits[b] for b in idx))


def _pair_order(n_views: int) -> tuple[np.ndarray, np.ndarray]:
    """Row order of the N^2 ordered pairs: (i, j) lexicographic."""
    idx = np.arange(n_views)
    return np.repeat(idx, n_views), np.tile(idx, n_views)


def _table_classes(table: PoseLabelTable) -> np.ndarray:
    """(n_views^2, 5) class indices in pair lexicographic order."""
    n = table.n_views
    rows = []
    for i in range(n):
        for j in range(n):
            rows.append(table.label(i, j).as_tuple())
    return np.array(rows, dtype=int)


def loss_pose(
    pair_logits: Sequence[Sequence[np.ndarray]] | np.ndarray,
    table: PoseLabelTable,
) -> float:
    """Average over all N^2 ordered pairs of the per-head mean CE.

    pair_logits is either an (N^2, total_classes) array in (i, j)
    lexicographic row order or a sequence of per-pair head-block lists as
    returned by forward_pose.
    """
    sizes = head_sizes(table.beta_deg)
    n_pairs = table.n_views**2
    if isinstance(pair_logits, np.ndarray):
        flat = np.asarray(pair_logits, dtype=float)
    else:
        flat = np.stack([np.concatenate(blocks) for blocks in pair_logits])
    if flat.shape != (n_pairs, sum(sizes)):
        raise SelectorError(
            f"pair logits shape {flat.shape}, expected {(n_pairs, sum(sizes))}"
        )
    classes = _table_classes(table)
    total = 0.0
    offset = 0
    for head, size in enumerate(sizes):
        block = flat[:, offset : offset + size]
        lse = logsumexp(block, axis=1)
        picked = block[np.arange(n_pairs), classes[:, head]]
        total += float(np.sum(lse - picked))
        offset += size
    return total / (n_pairs * len(sizes))


def total_loss(
    params: SelectorParams,
    clip: Clip,
    labels: PseudoLabelSet | Iterable[int],
    table: PoseLabelTable,
    w: float,
) -> tuple[float, float, float]:
    """(combined, view, pose) losses for one clip."""
    features = clip_features(clip)
    l_w = loss_view(forward_view(params, features), labels)
    n = params.n_views
    flat = np.stack(
        [
            np.concatenate(forward_pose(params, features[i], features[j]))
            for i in range(n)
            for j in range(n)
        ]
    )
    l_p = loss_pose(flat, table)
    return (l_w + w * l_p, l_w, l_p)


@dataclass(frozen=True)
class Batch:
    """Per-clip features, pseudo-label index lists, and pose classes."""

    features: np.ndarray  # (n_clips, n_views, f_dim)
    label_sets: tuple[tuple[int, ...], ...]
    pose_classes: np.ndarray  # (n_clips, n_views^2, 5)

    def __post_init__(self) -> None:
        if self.features.ndim != 3 or len(self.label_sets) != len(self.features):
            raise SelectorError("inconsistent batch contents")
        if len(self.pose_classes) != len(self.features):
            raise SelectorError("inconsistent batch contents")

    def __len__(self) -> int:
        return len(self.features)

    def subset(self, indices: np.ndarray) -> "Batch":
        return Batch(
            features=self.features[indices],
            label_sets=tuple(self.label_sets[i] for i in indices),
            pose_classes=self.pose_classes[indices],
        )


def make_batch(
    corpus: Corpus,
    labels: Mapping[str, PseudoLabelSet],
    tables: Mapping[str, PoseLabelTable],
) -> Batch:
    """Collect a corpus into dense arrays for training and evaluation."""
    feats, label_sets, classes = [], [], []
    for clip in corpus:
        if clip.clip_id not in labels:
            raise SelectorError(f"clip {clip.clip_id}: no pseudo-labels")
        if clip.clip_id not in tables:
            raise SelectorError(f"clip {clip.clip_id}: no pose labels")
        feats.append(clip_features(clip))
        label_sets.append(tuple(sorted(labels[clip.clip_id].labels)))
        classes.append(_table_classes(tables[clip.clip_id]))
    return Batch(
        features=np.stack(feats),
        label_sets=tuple(label_sets),
        pose_classes=np.stack(classes),
    )


def _argmin_label(logits: np.ndarray, label_sets) -> np.ndarray:
    """Per clip, the label with the lowest CE (ties to lowest index)."""
    picked = np.empty(len(label_sets), dtype=int)
    for b, idx in enumerate(label_sets):
        masked = np.full(logits.shape[1], -np.inf)
        masked[list(idx)] = logits[b, list(idx)]
        picked[b] = int(np.argmax(masked))
    return picked


def _softmax(a: np.ndarray) -> np.ndarray:
    shifted = a - a.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def batch_losses(
    params: SelectorParams, batch: Batch, w: float, targets: np.ndarray | None = None
) -> tuple[float, float, float]:
    """(mean combined, mean view, mean pose) losses over a batch.

    targets optionally overrides the min-CE label choice with a fixed
    per-clip target view (the single-label ablation).
    """
    out = _forward_backward(params, batch, w, targets, want_grad=False)
    return out[0]


def gradient(
    params: SelectorParams, batch: Batch, w: float, targets: np.ndarray | None = None
) -> tuple[tuple[float, float, float], SelectorParams]:
    """Mean-loss values and the analytic gradient as a params-shaped object."""
    losses, grads = _forward_backward(params, batch, w, targets, want_grad=True)
    return losses, grads


def _forward_backward(
    params: SelectorParams,
    batch: Batch,
    w: float,
    targets: np.ndarray | None,
    want_grad: bool,
):
    if len(batch) == 0:
        raise SelectorError("empty batch")
    feats = batch.features
    n_clips, n_views, f_dim = feats.shape
    if n_views != params.n_views or f_dim != params.f_dim:
        raise SelectorError(
            f"batch dims {(n_views, f_dim)} do not match params "
            f"{(params.n_views, params.f_dim)}"
        )
    sizes = params.pose_head_sizes
    n_pairs = n_views**2
    n_heads = len(sizes)

    # view branch forward
    h = np.einsum("bnf,hf->bnh", feats, params.proj_w_weight) + params.proj_w_bias
    z = h.reshape(n_clips, -1)
    u = np.tanh(z @ params.head_w1_weight.T + params.head_w1_bias)
    logits = u @ params.head_w2_weight.T + params.head_w2_bias

    if targets is None:
        picked = _argmin_label(logits, batch.label_sets)
    else:
        picked = np.asarray(targets, dtype=int)
        if picked.shape != (n_clips,):
            raise SelectorError("targets must give one view per clip")
    lse = logsumexp(logits, axis=1)
    l_view = float(np.mean(lse - logits[np.arange(n_clips), picked]))

    # pose branch forward
    pi, pj = _pair_order(n_views)
    hp = np.einsum("bnf,hf->bnh", feats, params.proj_p_weight) + params.proj_p_bias
    zp = np.concatenate([hp[:, pi, :], hp[:, pj, :]], axis=2)
    up = np.tanh(
        np.einsum("bpz,gz->bpg", zp, params.head_p1_weight) + params.head_p1_bias
    )
    plogits = (
        np.einsum("bpg,cg->bpc", up, params.head_p2_weight) + params.head_p2_bias
    )

    offsets = np.concatenate([[0], np.cumsum(sizes)])
    pose_ce = 0.0
    dplogits = np.zeros_like(plogits) if want_grad else None
    pair_rows = np.arange(n_pairs)
    for head in range(n_heads):
        block = plogits[:, :, offsets[head] : offsets[head + 1]]
        blse = logsumexp(block, axis=2)
        cls = batch.pose_classes[:, :, head]
        picked_logit = np.take_along_axis(block, cls[:, :, None], axis=2)[:, :, 0]
        pose_ce += float(np.sum(blse - picked_logit))
        if want_grad:
            dblock = _softmax(block)
            np.put_along_axis(
                dblock,
                cls[:, :, None],
                np.take_along_axis(dblock, cls[:, :, None], axis=2) - 1.0,
                axis=2,
            )
            dplogits[:, :, offsets[head] : offsets[head + 1]] = dblock
    l_pose = pose_ce / (n_clips * n_pairs * n_heads)
    l_total = l_view + w * l_pose
    losses = (l_total, l_view, l_pose)
    if not all(np.isfinite(losses)):
        raise SelectorError(f"non-finite loss {losses}")
    if not want_grad:
        return losses, None

    # view branch backward
    dlogits = _softmax(logits)
    dlogits[np.arange(n_clips), picked] -= 1.0
    dlogits /= n_clips
    d_w2 = dlogits.T @ u
    d_b2 = dlogits.sum(axis=0)
    du = dlogits @ params.head_w2_weight
    da1 = du * (1.0 - u**2)
    d_w1 = da1.T @ z
    d_b1 = da1.sum(axis=0)
    dz = da1 @ params.head_w1_weight
    dh = dz.reshape(n_clips, n_views, -1)
    d_pw = np.einsum("bnh,bnf->hf", dh, feats)
    d_pb = dh.sum(axis=(0, 1))

    # pose branch backward
    dplogits *= w / (n_clips * n_pairs * n_heads)
    d_v2 = np.einsum("bpc,bpg->cg", dplogits, up)
    d_c2 = dplogits.sum(axis=(0, 1))
    dup = np.einsum("bpc,cg->bpg", dplogits, params.head_p2_weight)
    da1p = dup * (1.0 - up**2)
    d_v1 = np.einsum("bpg,bpz->gz", da1p, zp)
    d_c1 = da1p.sum(axis=(0, 1))
    dzp = np.einsum("bpg,gz->bpz", da1p, params.head_p1_weight)
    dhp = np.zeros_like(hp)
    np.add.at(dhp, (slice(None), pi), dzp[:, :, : params.h_dim])
    np.add.at(dhp, (slice(None), pj), dzp[:, :, params.h_dim :])
    d_pp = np.einsum("bnh,bnf->hf", dhp, feats)
    d_ppb = dhp.sum(axis=(0, 1))

    grads = replace(
        params,
        proj_w_weight=d_pw,
        proj_w_bias=d_pb,
        head_w1_weight=d_w1,
        head_w1_bias=d_b1,
        head_w2_weight=d_w2,
        head_w2_bias=d_b2,
        proj_p_weight=d_pp,
        proj_p_bias=d_ppb,
        head_p1_weight=d_v1,
        head_p1_bias=d_c1,
        head_p2_weight=d_v2,
        head_p2_bias=d_c2,
    )
    return losses, grads


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for selector training."""

    w: float = 0.5
    learning_rate: float = 0.1
    h_dim: int = 16
    max_epochs: int = 200
    seed: int = 0
    patience: int = 5
    batch_size: int = 32
    beta_deg: int = 30
    label_mode: LabelMode = "min"

    def __post_init__(self) -> None:
        if self.w < 0:
            raise SelectorError("w must be non-negative")
        if self.learning_rate <= 0:
            raise SelectorError("learning_rate must be positive")
        if self.h_dim < 1 or self.batch_size < 1:
            raise SelectorError("h_dim and batch_size must be positive")
        if self.patience < 1:
            raise SelectorError("patience must be at least 1")
        if self.label_mode not in ("min", "random_single"):
            raise SelectorError(f"unknown label_mode {self.label_mode!r}")


@dataclass
class TrainHistory:
    """Per-epoch losses plus the stopping and best epochs (1-based)."""

    train_lw: list[float] = field(default_factory=list)
    train_lp: list[float] = field(default_factory=list)
    train_ls: list[float] = field(default_factory=list)
    val_ls: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0

    def append(self, lw, lp, ls, vls, vacc) -> None:
        self.train_lw.append(float(lw))
        self.train_lp.append(float(lp))
        self.train_ls.append(float(ls))
        self.val_ls.append(float(vls))
        self.val_acc.append(float(vacc))

    def n_epochs(self) -> int:
        return len(self.train_ls)


def _val_accuracy(params: SelectorParams, batch: Batch) -> float:
    h = np.einsum("bnf,hf->bnh", batch.features, params.proj_w_weight)
    z = (h + params.proj_w_bias).reshape(len(batch), -1)
    u = np.tanh(z @ params.head_w1_weight.T + params.head_w1_bias)
    logits = u @ params.head_w2_weight.T + params.head_w2_bias
    best = np.argmax(logits, axis=1)
    hits = sum(
        int(b) in idx for b, idx in zip(best, batch.label_sets)
    )
    return hits / len(batch)


def train(
    train_corpus: Corpus,
    labels: Mapping[str, PseudoLabelSet],
    tables: Mapping[str, PoseLabelTable],
    val_corpus: Corpus,
    cfg: TrainConfig,
) -> tuple[SelectorParams, TrainHistory]:
    """Mini-batch gradient descent with early stopping on validation loss.

    Stops once the validation loss has increased for `patience` consecutive
    epochs (or at max_epochs) and returns the parameters of the epoch with
    the lowest validation loss.
    """
    if len(train_corpus) == 0 or len(val_corpus) == 0:
        raise SelectorError("train and val corpora must be non-empty")
    train_batch = make_batch(train_corpus, labels, tables)
    val_batch = make_batch(val_corpus, labels, tables)

    params = init_params(
        f_dim=train_corpus.f_dim,
        h_dim=cfg.h_dim,
        n_views=train_corpus.n_views,
        beta_deg=cfg.beta_deg,
        seed=cfg.seed,
    )
    history = TrainHistory()
    if cfg.max_epochs == 0:
        return params, history

    best_params = params.copy()
    best_val = np.inf
    rising = 0
    n = len(train_batch)
    for epoch in range(1, cfg.max_epochs + 1):
        rng = np.random.default_rng([cfg.seed, epoch])
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            sub = train_batch.subset(order[start : start + cfg.batch_size])
            if cfg.label_mode == "random_single":
                targets = np.array(
                    [idx[rng.integers(len(idx))] for idx in sub.label_sets]
                )
            else:
                targets = None
            _, grads = gradient(params, sub, cfg.w, targets)
            for name in _ARRAY_FIELDS:
                getattr(params, name)[...] -= cfg.learning_rate * getattr(
                    grads, name
                )
        (ls, lw, lp) = batch_losses(params, train_batch, cfg.w)
        (vls, _, _) = batch_losses(params, val_batch, cfg.w)
        vacc = _val_accuracy(params, val_batch)
        history.append(lw, lp, ls, vls, vacc)
        history.stopped_epoch = epoch
        if vls < best_val:
            best_val = vls
            best_params = params.copy()
            history.best_epoch = epoch
        if len(history.val_ls) >= 2 and vls > history.val_ls[-2]:
            rising += 1
            if rising >= cfg.patience:
                break
        else:
            rising = 0
    return best_params, history


def select(
    params: SelectorParams, clip: Clip | np.ndarray
) -> tuple[int, list[int]]:
    """Best view index plus the full view order by descending logit.

    Ties go to the lower view index, so the result is invariant under any
    strictly increasing transform of the logits.
    """
    features = clip_features(clip) if isinstance(clip, Clip) else clip
    logits = forward_view(params, features)
    order = np.argsort(-logits, kind="stable")
    return int(order[0]), [int(i) for i in order]


def save_checkpoint(
    params: SelectorParams,
    path: str,
    cfg: TrainConfig | None = None,
    history: TrainHistory | None = None,
) -> None:
    """Versioned JSON checkpoint; floats keep full repr precision."""
    obj = {
        "version": CHECKPOINT_VERSION,
        "dims": {
            "f_dim": params.f_dim,
            "h_dim": params.h_dim,
            "n_views": params.n_views,
            "beta_deg": params.beta_deg,
        },
        "weights": {
            name: getattr(params, name).tolist() for name in _ARRAY_FIELDS
        },
    }
    if cfg is not None:
        obj["train_config"] = {
            "w": cfg.w,
            "learning_rate": cfg.learning_rate,
            "h_dim": cfg.h_dim,
            "max_epochs": cfg.max_epochs,
            "seed": cfg.seed,
            "patience": cfg.patience,
            "batch_size": cfg.batch_size,
            "beta_deg": cfg.beta_deg,
            "label_mode": cfg.label_mode,
        }
    if history is not None:
        obj["history"] = {
            "train_lw": history.train_lw,
            "train_lp": history.train_lp,
            "train_ls": history.train_ls,
            "val_ls": history.val_ls,
            "val_acc": history.val_acc,
            "stopped_epoch": history.stopped_epoch,
            "best_epoch": history.best_epoch,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_checkpoint(path: str) -> tuple[SelectorParams, TrainHistory | None]:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("version") != CHECKPOINT_VERSION:
        raise SelectorError(f"unsupported checkpoint version {obj.get('version')}")
    dims = obj["dims"]
    params = SelectorParams(
        f_dim=int(dims["f_dim"]),
        h_dim=int(dims["h_dim"]),
        n_views=int(dims["n_views"]),
        beta_deg=int(dims["beta_deg"]),
        **{name: np.array(obj["weights"][name]) for name in _ARRAY_FIELDS},
    )
    history = None
    if "history" in obj:
        h = obj["history"]
        history = TrainHistory(
            train_lw=list(h["train_lw"]),
            train_lp=list(h["train_lp"]),
            train_ls=list(h["train_ls"]),
            val_ls=list(h["val_ls"]),
            val_acc=list(h["val_acc"]),
            stopped_epoch=int(h["stopped_epoch"]),
            best_epoch=int(h["best_epoch"]),
        )
    return params, history


def write_train_log(history: TrainHistory, path: str) -> None:
    """CSV: epoch, view loss, pose loss, combined, val loss, val accuracy."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "L_W", "L_P", "L_S", "val_LS", "val_acc"])
        for e in range(history.n_epochs()):
            writer.writerow(
                [
                    e + 1,
                    repr(history.train_lw[e]),
                    repr(history.train_lp[e]),
                    repr(history.train_ls[e]),
                    repr(history.val_ls[e]),
                    repr(history.val_acc[e]),
                ]
            )
