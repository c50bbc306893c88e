"""Relative camera pose computation and fixed-size angle-bin discretization.

For cameras i and j with world-to-camera extrinsics (R, t):

  rotation_rel = R_j @ R_i.T            (camera i frame -> camera j frame)
  direction    = normalize(R_i @ (c_j - c_i))   with centers c = -R.T @ t

so both quantities are invariant to any global rigid transform of the
scene. The rotation is decomposed into intrinsic Z-Y-X Euler angles
(yaw about z, then pitch about y, then roll about x); the direction into
azimuth = atan2(d_y, d_x) and elevation = asin(d_z) in camera i's frame.
Angles are discretized into bins of beta degrees: full-circle heads
(yaw, roll, azimuth) span [-180, 180) and half-range heads (pitch,
elevation) span [-90, 90], with the closed upper bound folded into the
last bin. Coincident camera centers get a dedicated extra class on the
azimuth and elevation heads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .corpus import CameraExtrinsics, Clip

SAME_CENTER_EPS = 1e-9
_GIMBAL_EPS = 1e-9

HEAD_NAMES = ("yaw", "pitch", "roll", "azimuth", "elevation")
FULL_RANGE_HEADS = frozenset({"yaw", "roll", "azimuth"})


class PoseError(ValueError):
    """Raised for invalid poses, bin sizes, or label files."""


def head_sizes(beta_deg: int) -> tuple[int, int, int, int, int]:
    """Class counts per head; azimuth/elevation get +1 for SAME_CENTER."""
    if beta_deg <= 0 or 360 % beta_deg or 180 % beta_deg:
        raise PoseError(f"bin size {beta_deg} must divide 360 and 180")
    full = 360 // beta_deg
    half = 180 // beta_deg
    return (full, half, full, full + 1, half + 1)


@dataclass(frozen=True)
class RelativePose:
    """Relative rotation plus unit displacement direction (None when the
    camera centers coincide)."""

    rotation_rel: np.ndarray
    direction: np.ndarray | None

    def __post_init__(self) -> None:
        r = np.asarray(self.rotation_rel, dtype=float)
        if r.shape != (3, 3) or np.abs(r @ r.T - np.eye(3)).max() > 1e-6:
            raise PoseError("rotation_rel is not a rotation matrix")
        if abs(np.linalg.det(r) - 1.0) > 1e-6:
            raise PoseError("rotation_rel determinant is not +1")
        object.__setattr__(self, "rotation_rel", r)
        r.setflags(write=False)
        if self.direction is not None:
            d = np.asarray(self.direction, dtype=float)
            if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-9:
                raise PoseError("direction must be a unit 3-vector")
            object.__setattr__(self, "direction", d)
            d.setflags(write=False)

    @property
    def same_center(self) -> bool:
        return self.direction is None


@dataclass(frozen=True)
class PoseLabel:
    """Discretized angle-bin indices for one ordered view pair."""

    yaw_bin: int
    pitch_bin: int
    roll_bin: int
    azimuth_bin: int
    elevation_bin: int
    same_center: bool

    def validate(self, beta_deg: int) -> None:
        sizes = head_sizes(beta_deg)
        bins = self.as_tuple()
        for name, value, size in zip(HEAD_NAMES, bins, sizes):
            extra = name in ("azimuth", "elevation") and self.same_center
            limit = size if extra or name not in ("azimuth", "elevation") else size - 1
            if extra:
                if value != size - 1:
                    raise PoseError(
                        f"{name} bin {value} must be the extra class "
                        f"{size - 1} when centers coincide"
                    )
            elif not 0 <= value < limit:
                raise PoseError(f"{name} bin {value} outside [0, {limit})")

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (
            self.yaw_bin,
            self.pitch_bin,
            self.roll_bin,
            self.azimuth_bin,
            self.elevation_bin,
        )


def euler_to_matrix(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    """Intrinsic Z-Y-X rotation: Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    y, p, r = np.radians([yaw_deg, pitch_deg, roll_deg])
    cy, sy = math.cos(y), math.sin(y)
    cp, sp = math.cos(p), math.sin(p)
    cr, sr = math.cos(r), math.sin(r)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def matrix_to_euler(r: np.ndarray) -> tuple[float, float, float]:
    """Inverse of euler_to_matrix, in degrees: yaw in [-180, 180),
    pitch in [-90, 90], roll in [-180, 180); roll = 0 at gimbal lock."""
    s = float(np.clip(-r[2, 0], -1.0, 1.0))
    pitch = math.degrees(math.asin(s))
    if abs(s) > 1.0 - _GIMBAL_EPS:
        yaw = math.degrees(math.atan2(-r[0, 1], r[1, 1]))
        roll = 0.0
    else:
        yaw = math.degrees(math.atan2(r[1, 0], r[0, 0]))
        roll = math.degrees(math.atan2(r[2, 1], r[2, 2]))
    return (_wrap_half_open(yaw), pitch, _wrap_half_open(roll))


def _wrap_half_open(angle_deg: float) -> float:
    """Wrap into [-180, 180)."""
    return (angle_deg + 180.0) % 360.0 - 180.0


def relative_pose(ext_i: CameraExtrinsics, ext_j: CameraExtrinsics) -> RelativePose:
    """Pose of camera j relative to camera i, in camera i's frame."""
    rotation_rel = ext_j.rotation @ ext_i.rotation.T
    offset = ext_j.center() - ext_i.center()
    norm = np.linalg.norm(offset)
    if norm < SAME_CENTER_EPS:
        return RelativePose(rotation_rel=rotation_rel, direction=None)
    direction = ext_i.rotation @ (offset / norm)
    # renormalize to absorb rounding from the rotation product
    direction = direction / np.linalg.norm(direction)
    return RelativePose(rotation_rel=rotation_rel, direction=direction)


def bin_of(angle_deg: float, beta_deg: int, full_range: bool) -> int:
    """floor((angle + offset) / beta), closed upper bound into the last bin."""
    offset = 180.0 if full_range else 90.0
    n_bins = int(2 * offset) // beta_deg
    shifted = angle_deg + offset
    if shifted < 0.0 or shifted > 2 * offset:
        raise PoseError(f"angle {angle_deg} outside expected range")
    return min(int(shifted // beta_deg), n_bins - 1)


def bin_center(bin_index: int, beta_deg: int, full_range: bool) -> float:
    """Midpoint angle of a bin, the inverse direction of bin_of."""
    offset = 180.0 if full_range else 90.0
    return (bin_index + 0.5) * beta_deg - offset


def discretize_pose(pose: RelativePose, beta_deg: int = 30) -> PoseLabel:
    """Map a relative pose to per-head bin indices."""
    sizes = head_sizes(beta_deg)
    yaw, pitch, roll = matrix_to_euler(pose.rotation_rel)
    yaw_bin = bin_of(yaw, beta_deg, full_range=True)
    pitch_bin = bin_of(pitch, beta_deg, full_range=False)
    roll_bin = bin_of(roll, beta_deg, full_range=True)
    if pose.same_center:
        az_bin = sizes[3] - 1
        el_bin = sizes[4] - 1
    else:
        d = pose.direction
        azimuth = _wrap_half_open(math.degrees(math.atan2(d[1], d[0])))
        elevation = math.degrees(math.asin(float(np.clip(d[2], -1.0, 1.0))))
        az_bin = bin_of(azimuth, beta_deg, full_range=True)
        el_bin = bin_of(elevation, beta_deg, full_range=False)
    label = PoseLabel(
        yaw_bin=yaw_bin,
        pitch_bin=pitch_bin,
        roll_bin=roll_bin,
        azimuth_bin=az_bin,
        elevation_bin=el_bin,
        same_center=pose.same_center,
    )
    label.validate(beta_deg)
    return label


@dataclass(frozen=True)
class PoseLabelTable:
    """Discretized pose labels for all N^2 ordered view pairs of a clip."""

    clip_id: str
    beta_deg: int
    pairs: dict[tuple[int, int], PoseLabel]

    def __post_init__(self) -> None:
        n = self.n_views
        expected = {(i, j) for i in range(n) for j in range(n)}
        if set(self.pairs) != expected:
            raise PoseError(
                f"clip {self.clip_id}: pose table must cover all "
                f"{n}x{n} ordered pairs"
            )
        for label in self.pairs.values():
            label.validate(self.beta_deg)

    @property
    def n_views(self) -> int:
        return int(round(math.sqrt(len(self.pairs))))

    def label(self, i: int, j: int) -> PoseLabel:
        return self.pairs[(i, j)]


def pose_label_table(clip: Clip, beta_deg: int = 30) -> PoseLabelTable:
    """Labels for every ordered pair, including each view with itself."""
    pairs = {}
    for i, vi in enumerate(clip.views):
        for j, vj in enumerate(clip.views):
            pose = relative_pose(vi.extrinsics, vj.extrinsics)
            pairs[(i, j)] = discretize_pose(pose, beta_deg)
    return PoseLabelTable(clip_id=clip.clip_id, beta_deg=beta_deg, pairs=pairs)


def save_pose_tables(
    tables: Mapping[str, PoseLabelTable], path: str, header: dict | None = None
) -> None:
    """One JSON line per clip, after an optional provenance header."""
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"_config": header}) + "\n")
        for clip_id in sorted(tables):
            table = tables[clip_id]
            obj = {
                "clip_id": table.clip_id,
                "beta_deg": table.beta_deg,
                "pairs": {
                    f"{i},{j}": {
                        "yaw": lab.yaw_bin,
                        "pitch": lab.pitch_bin,
                        "roll": lab.roll_bin,
                        "az": lab.azimuth_bin,
                        "el": lab.elevation_bin,
                        "same_center": lab.same_center,
                    }
                    for (i, j), lab in sorted(table.pairs.items())
                },
            }
            fh.write(json.dumps(obj) + "\n")


def load_pose_tables(path: str) -> dict[str, PoseLabelTable]:
    tables: dict[str, PoseLabelTable] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PoseError(f"{path}:{lineno}: parse error: {exc}") from exc
            if "_config" in obj:
                continue
            pairs = {}
            for key, lab in obj["pairs"].items():
                i, j = (int(p) for p in key.split(","))
                pairs[(i, j)] = PoseLabel(
                    yaw_bin=int(lab["yaw"]),
                    pitch_bin=int(lab["pitch"]),
                    roll_bin=int(lab["roll"]),
                    azimuth_bin=int(lab["az"]),
                    elevation_bin=int(lab["el"]),
                    same_center=bool(lab["same_center"]),
                )
            table = PoseLabelTable(
                clip_id=obj["clip_id"],
                beta_deg=int(obj["beta_deg"]),
                pairs=pairs,
            )
            tables[table.clip_id] = table
    if not tables:
        raise PoseError(f"{path}: no pose records")
    return tables
