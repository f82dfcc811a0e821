"""Latent sequences, the resting-state manifold, and trajectory analysis."""

from __future__ import annotations

import math
import warnings
from bisect import bisect_left, insort
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractError,
    DegenerateDistributionError,
    EmptyInputError,
    InsufficientDataError,
    ParameterError,
    ShapeError,
)
from .linalg import svd
from .nn import encode
from .signal import Recording

FILTER_PRESETS_MS = {"short": 100.0, "long": 6000.0}


@dataclass(frozen=True, eq=False)
class RestingManifold:
    points: np.ndarray
    centroid: np.ndarray
    basis3: np.ndarray
    singular_values: np.ndarray
    degenerate: bool = False

    @property
    def latent_dim(self) -> int:
        return self.centroid.shape[0]

    def projected_points(self) -> np.ndarray:
        return (self.points - self.centroid) @ self.basis3


@dataclass(frozen=True, eq=False)
class Trajectory:
    sample_rate_hz: float
    coords: np.ndarray
    condition_tag: str = ""
    filter_ms: float | None = None

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] < 1:
            raise ShapeError(f"coords must be (T, 3) with T >= 1, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ParameterError("coords must be finite")
        if not self.sample_rate_hz > 0:
            raise ParameterError("sample_rate_hz must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __len__(self):
        return self.coords.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) / self.sample_rate_hz


@dataclass(frozen=True)
class Kinematics:
    velocity: np.ndarray
    acceleration: np.ndarray
    speed: np.ndarray


@dataclass(frozen=True)
class SeparationReport:
    centroid_distance: float
    spread_a: float
    spread_b: float
    pooled_spread: float
    ratio: float

    def to_dict(self) -> dict:
        return {
            "centroid_distance": self.centroid_distance,
            "spread_a": self.spread_a,
            "spread_b": self.spread_b,
            "pooled_spread": self.pooled_spread,
            "separation_ratio": self.ratio,
        }


def encode_sequence(model, rec: Recording) -> np.ndarray:
    """Latent code of every frame of ``rec``, in order.

    ``rec`` must have been normalized with the model's own statistics.
    """
    if rec.n_channels != model.spec.input_dim:
        raise ShapeError(
            f"recording has {rec.n_channels} channels, model expects {model.spec.input_dim}"
        )
    if rec.normalization is None:
        raise ContractError("recording is not normalized; apply normalize(rec, model.stats) first")
    if rec.normalization != model.stats:
        raise ContractError("recording was normalized with statistics other than the model's")
    return encode(model.spec, model.weights, rec.frames)


def build_manifold(latents) -> RestingManifold:
    """Centroid and top-3 principal directions of a resting-state latent cloud."""
    P = np.array(latents, dtype=np.float64)
    if P.ndim != 2:
        raise ShapeError("latents must be 2-D")
    if P.shape[0] < 4:
        raise InsufficientDataError("manifold needs at least 4 points")
    if P.shape[1] < 3:
        raise ShapeError("latent dimension must be at least 3 for a 3-D frame")
    centroid = P.mean(axis=0)
    _, S, V = svd(P - centroid)
    basis = V[:, :3]
    nonzero = S > max(S[0], 1.0) * 1e-12 if S.size else S
    degenerate = int(np.count_nonzero(nonzero)) < 3
    if degenerate:
        warnings.warn(
            "resting manifold spans fewer than 3 directions; basis completed arbitrarily",
            stacklevel=2,
        )
    for a in (P, centroid, basis, S):
        a.setflags(write=False)
    return RestingManifold(P, centroid, basis, S, degenerate)


def to_trajectory(latents, manifold: RestingManifold, rate: float, tag: str = "") -> Trajectory:
    Z = np.asarray(latents, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != manifold.latent_dim:
        raise ShapeError(
            f"latents must be (N, {manifold.latent_dim}), got {Z.shape}"
        )
    return Trajectory(rate, (Z - manifold.centroid) @ manifold.basis3, tag)


def window_samples(window_ms: float, rate: float) -> int:
    """Odd window length for a duration: rounded half-up, bumped by one if even."""
    if not window_ms > 0:
        raise ParameterError("window_ms must be positive")
    w = max(1, int(math.floor(window_ms / 1000.0 * rate + 0.5)))
    return w if w % 2 else w + 1


def running_median(x, width: int) -> np.ndarray:
    """Centered sliding median with windows truncated at the edges.

    ``width`` must be odd. Near the ends fewer samples are available and an
    even-sized window yields the mean of its two middle values.
    """
    x = np.asarray(x, dtype=np.float64)
    if width < 1 or width % 2 == 0:
        raise ParameterError("width must be a positive odd integer")
    n = x.shape[0]
    h = width // 2
    out = np.empty(n)
    vals = x.tolist()
    win = sorted(vals[: min(h, n)])
    for i in range(n):
        enter = i + h
        if enter < n:
            insort(win, vals[enter])
        leave = i - h - 1
        if leave >= 0:
            del win[bisect_left(win, vals[leave])]
        m = len(win)
        out[i] = win[m // 2] if m % 2 else (win[m // 2 - 1] + win[m // 2]) / 2.0
    return out


def median_filter(traj: Trajectory, window_ms: float) -> Trajectory:
    w = window_samples(window_ms, traj.sample_rate_hz)
    if w > 10 * len(traj):
        raise ParameterError(
            f"window of {w} samples exceeds 10x the trajectory length {len(traj)}"
        )
    coords = np.column_stack([running_median(traj.coords[:, k], w) for k in range(3)])
    return Trajectory(traj.sample_rate_hz, coords, traj.condition_tag, window_ms)


def displacement(traj: Trajectory, manifold: RestingManifold, mode: str = "centroid") -> np.ndarray:
    """Distance of every sample from the resting state.

    ``centroid`` measures from the frame origin (the resting centroid);
    ``nearest-point`` measures to the closest projected resting sample.
    """
    if mode == "centroid":
        return np.linalg.norm(traj.coords, axis=1)
    if mode == "nearest-point":
        if manifold.points.shape[0] == 0:
            raise EmptyInputError("manifold has no points")
        from scipy.spatial import cKDTree

        dist, _ = cKDTree(manifold.projected_points()).query(traj.coords)
        return dist
    raise ParameterError(f"unknown displacement mode {mode!r}")


def kinematics(traj: Trajectory) -> Kinematics:
    """Finite-difference velocity and acceleration (central inside, one-sided at the ends)."""
    if len(traj) < 3:
        raise InsufficientDataError("kinematics needs at least 3 samples")
    dt = 1.0 / traj.sample_rate_hz
    vel = np.gradient(traj.coords, dt, axis=0)
    acc = np.gradient(vel, dt, axis=0)
    return Kinematics(vel, acc, np.linalg.norm(vel, axis=1))


def separation(traj_a: Trajectory, traj_b: Trajectory) -> SeparationReport:
    """Centroid distance over pooled mean distance-to-own-centroid."""
    A, B = traj_a.coords, traj_b.coords
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    da = np.linalg.norm(A - ca, axis=1)
    db = np.linalg.norm(B - cb, axis=1)
    pooled = float((da.sum() + db.sum()) / (da.size + db.size))
    if pooled <= 1e-12:
        raise DegenerateDistributionError("both trajectories have zero spread")
    dist = float(np.linalg.norm(ca - cb))
    return SeparationReport(dist, float(da.mean()), float(db.mean()), pooled, dist / pooled)


def resting_manifold(model, resting: Recording) -> RestingManifold:
    """Manifold of a raw resting recording under the model's normalization."""
    from .signal import normalize

    return build_manifold(encode_sequence(model, normalize(resting, model.stats)))


def track(model, manifold: RestingManifold, task: Recording, filter_ms: float | None = None,
          tag: str | None = None) -> Trajectory:
    """Raw task recording to a (optionally median-filtered) manifold-frame trajectory."""
    from .signal import normalize

    Z = encode_sequence(model, normalize(task, model.stats))
    traj = to_trajectory(Z, manifold, task.sample_rate_hz, tag if tag is not None else task.condition or "")
    return traj if filter_ms is None else median_filter(traj, filter_ms)
