"""Training loop, common-mode curriculum and checkpoint persistence."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import struct
import time
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    DegenerateLatentError,
    DivergenceError,
    IncompatibleCheckpointError,
    InsufficientDataError,
    IntegrityError,
    ParameterError,
)
from .nn import NetworkSpec, Weights, autoencoder_spec, encode, init_weights, loss_and_gradients, sgd_step
from .ortho import (
    AnglePenaltyReport,
    OrthoConfig,
    angular_penalty,
    check_convergence,
    epoch_orthonormalize,
    penalty_and_gradient,
)
from .signal import NormalizationStats, Recording, common_mode_pattern, compute_stats, normalize

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6
CHECKPOINT_MAGIC = b"LTAE"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 200
    batch_size: int = 64
    lr: float = 1e-3
    momentum: float = 0.9
    penalty_weight: float = 1.0
    ortho: OrthoConfig = field(default_factory=OrthoConfig)
    seed: int = 0
    snr_floor_epoch: bool = True
    latent_dim: int = 3
    lr_schedule: str = "cosine"
    lr_min: float = 0.0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ParameterError("max_epochs must be positive")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be positive")
        if not self.lr > 0:
            raise ParameterError("lr must be positive")
        if not 0 <= self.momentum < 1:
            raise ParameterError("momentum must lie in [0, 1)")
        if self.penalty_weight < 0:
            raise ParameterError("penalty_weight must be nonnegative")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ParameterError(f"unknown lr_schedule {self.lr_schedule!r}")
        if not 0 <= self.lr_min <= self.lr:
            raise ParameterError("lr_min must lie in [0, lr]")
        if self.latent_dim < 1:
            raise ParameterError("latent_dim must be positive")
        if isinstance(self.ortho, dict):
            object.__setattr__(self, "ortho", OrthoConfig(**self.ortho))
        # the training-level weight is authoritative
        if self.ortho.penalty_weight != self.penalty_weight:
            object.__setattr__(
                self, "ortho", dataclasses.replace(self.ortho, penalty_weight=self.penalty_weight)
            )

    def lr_at(self, epoch: int) -> float:
        if self.lr_schedule == "constant":
            return self.lr
        frac = epoch / self.max_epochs
        return self.lr_min + 0.5 * (self.lr - self.lr_min) * (1.0 + np.cos(np.pi * frac))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "ortho" in d:
            d["ortho"] = OrthoConfig(**d["ortho"])
        return cls(**d)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    curriculum: bool
    mse: float
    penalty: float
    max_angle_deviation_deg: float
    orthonormalized: bool
    wall_ms: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def to_list(self, timing: bool = True) -> list[dict]:
        out = [r.to_dict() for r in self.records]
        if not timing:
            for d in out:
                d.pop("wall_ms")
        return out

    @classmethod
    def from_list(cls, items) -> "TrainHistory":
        return cls([EpochRecord(**{"wall_ms": 0.0, **d}) for d in items])


@dataclass
class TrainedModel:
    spec: NetworkSpec
    weights: Weights
    stats: NormalizationStats
    config: TrainConfig
    history: TrainHistory
    converged: bool
    final_report: AnglePenaltyReport | None = None

    def __post_init__(self):
        if self.stats.n_channels != self.spec.input_dim:
            raise ParameterError("stats channel count differs from network input width")

    def content_hash(self) -> str:
        """Hash of spec, config, stats and weights; excludes timing."""
        return hashlib.sha256(_payload(self, timing=False)).hexdigest()


class Curriculum:
    """Lazily materialized per-epoch datasets.

    Epoch 0 is the tiled A1/A2 common-mode pattern (unshuffled) when the
    curriculum is enabled; every real-data epoch is a seeded row permutation.
    """

    def __init__(self, train_rec: Recording, cfg: TrainConfig):
        self.data = train_rec.frames
        self.cfg = cfg
        self.common_mode = None
        if cfg.snr_floor_epoch:
            self.common_mode = common_mode_pattern(train_rec, train_rec.n_frames).frames

    def __len__(self):
        return self.cfg.max_epochs

    def is_curriculum(self, epoch: int) -> bool:
        return epoch == 0 and self.common_mode is not None

    def permutation(self, epoch: int) -> np.ndarray:
        rng = np.random.default_rng([self.cfg.seed, epoch])
        return rng.permutation(self.data.shape[0])

    def __getitem__(self, epoch: int) -> np.ndarray:
        if not 0 <= epoch < len(self):
            raise IndexError(epoch)
        if self.is_curriculum(epoch):
            return self.common_mode
        return self.data[self.permutation(epoch)]


def build_curriculum(train_rec: Recording, cfg: TrainConfig) -> Curriculum:
    return Curriculum(train_rec, cfg)


def _report(Z) -> AnglePenaltyReport:
    try:
        return angular_penalty(Z)
    except DegenerateLatentError:
        L = Z.shape[1]
        n = L * (L - 1) // 2
        return AnglePenaltyReport(float("inf"), np.full(n, np.nan), float("inf"))


def train(
    rec: Recording,
    cfg: TrainConfig = TrainConfig(),
    spec: NetworkSpec | None = None,
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> TrainedModel:
    """Fit the autoencoder on ``rec`` (raw units; normalized internally).

    Stops as soon as the latent angles of the full real dataset are within
    ``cfg.ortho.tolerance_deg`` of 90 degrees after at least one real-data
    epoch, else after ``cfg.max_epochs``.
    """
    if rec.n_frames < 2 * cfg.batch_size:
        raise InsufficientDataError(
            f"need at least {2 * cfg.batch_size} frames, got {rec.n_frames}"
        )
    stats = compute_stats(rec)
    data = normalize(rec, stats)
    if spec is None:
        spec = autoencoder_spec(rec.n_channels, cfg.latent_dim)
    if spec.input_dim != rec.n_channels:
        raise ParameterError("network input width differs from channel count")

    with np.errstate(over="ignore", invalid="ignore"):
        return _fit(spec, stats, data, cfg, on_epoch)


def _fit(spec, stats, data, cfg, on_epoch) -> TrainedModel:
    curriculum = build_curriculum(data, cfg)
    X_real = data.frames
    w = init_weights(spec, cfg.seed)
    velocity = None
    lam = cfg.penalty_weight
    history = TrainHistory()
    converged = False
    report = None

    for epoch in range(cfg.max_epochs):
        t0 = time.perf_counter()
        X = curriculum[epoch]
        lr = cfg.lr_at(epoch)
        # common-mode input is one scalar signal, so its latent columns are
        # collinear by construction; the angle penalty only applies to real data
        lam_epoch = 0.0 if curriculum.is_curriculum(epoch) else lam
        for start in range(0, X.shape[0], cfg.batch_size):
            batch = X[start:start + cfg.batch_size]
            try:
                _, _, g = loss_and_gradients(batch, spec, w, lam_epoch, penalty_and_gradient)
            except DegenerateLatentError:
                _, _, g = loss_and_gradients(batch, spec, w, 0.0)
            w, velocity = sgd_step(w, g, lr, cfg.momentum, velocity)

        if not all(np.all(np.isfinite(a)) for a in w.arrays()):
            raise DivergenceError(f"non-finite weights at epoch {epoch}", epoch=epoch)
        applied = False
        if cfg.ortho.orthonormalize_each_epoch:
            w, applied = epoch_orthonormalize(w, spec)

        Z = encode(spec, w, X_real)
        R = _reconstruct(spec, w, Z) - X_real
        mse = float(np.sum(R * R) / R.size)
        if not np.isfinite(mse) or mse > DIVERGENCE_LIMIT:
            raise DivergenceError(f"training diverged at epoch {epoch} (mse={mse})", epoch=epoch)
        report = _report(Z)
        rec_ = EpochRecord(
            epoch=epoch,
            curriculum=curriculum.is_curriculum(epoch),
            mse=mse,
            penalty=report.penalty,
            max_angle_deviation_deg=report.max_deviation_deg,
            orthonormalized=applied,
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
        history.records.append(rec_)
        log.debug("epoch %d mse %.3e dev %.4f deg", epoch, mse, report.max_deviation_deg)
        if on_epoch is not None:
            on_epoch(rec_)
        if not rec_.curriculum and check_convergence(report, cfg.ortho):
            converged = True
            break

    return TrainedModel(spec, w, stats, cfg, history, converged, report)


def _reconstruct(spec: NetworkSpec, w: Weights, Z: np.ndarray) -> np.ndarray:
    h = Z
    for i in range(spec.latent_layer + 1, len(spec.layers)):
        h = h @ w.matrices[i].T + w.biases[i]
        if spec.layers[i].activation == "relu":
            h = np.maximum(h, 0.0)
    return h


# ---------------------------------------------------------------------------
# checkpoints
#
# layout: b"LTAE" | u32 version | u64 header length | UTF-8 JSON header |
#         float64 LE arrays in ladder order (W0, b0, W1, b1, ...) | u32 CRC32 of all prior bytes

def _header(model: TrainedModel, include_history: bool = True) -> dict:
    h = {
        "spec": model.spec.to_dict(),
        "config": model.config.to_dict(),
        "stats": model.stats.to_dict(),
    }
    if include_history:
        h["history"] = model.history.to_list()
        h["converged"] = model.converged
        h["final_report"] = None if model.final_report is None else model.final_report.to_dict()
    return h


def _payload(model: TrainedModel, timing: bool = True) -> bytes:
    header = json.dumps(_header(model, include_history=timing), sort_keys=True).encode()
    body = b"".join(np.ascontiguousarray(a, "<f8").tobytes() for a in model.weights.arrays())
    return header + body


def checkpoint_bytes(model: TrainedModel) -> bytes:
    header = json.dumps(_header(model), sort_keys=True).encode()
    out = bytearray(CHECKPOINT_MAGIC)
    out += struct.pack("<IQ", CHECKPOINT_VERSION, len(header))
    out += header
    for a in model.weights.arrays():
        out += np.ascontiguousarray(a, dtype="<f8").tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def save_checkpoint(model: TrainedModel, path) -> None:
    Path(path).write_bytes(checkpoint_bytes(model))


def checkpoint_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def parse_checkpoint(blob: bytes) -> TrainedModel:
    if len(blob) < 20 or blob[:4] != CHECKPOINT_MAGIC:
        raise IntegrityError("not an LTAE checkpoint (bad magic or truncated)")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise IncompatibleCheckpointError(
            f"checkpoint format version {version}, this build reads version {CHECKPOINT_VERSION}"
        )
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) != crc:
        raise IntegrityError("checkpoint checksum mismatch (file corrupt or truncated)")
    (hlen,) = struct.unpack_from("<Q", blob, 8)
    try:
        header = json.loads(blob[16:16 + hlen].decode())
        spec = NetworkSpec.from_dict(header["spec"])
        config = TrainConfig.from_dict(header["config"])
        stats = NormalizationStats.from_dict(header["stats"])
    except (ValueError, KeyError, TypeError) as exc:
        raise IntegrityError(f"malformed checkpoint header: {exc}") from exc

    offset = 16 + hlen
    mats, biases = [], []
    for ly in spec.layers:
        for shape, dest in (((ly.out_dim, ly.in_dim), mats), ((ly.out_dim,), biases)):
            n = int(np.prod(shape))
            end = offset + 8 * n
            if end > len(blob) - 4:
                raise IntegrityError("checkpoint weight block truncated")
            dest.append(np.frombuffer(blob, "<f8", n, offset).astype(np.float64).reshape(shape))
            offset = end
    if offset != len(blob) - 4:
        raise IntegrityError("trailing bytes after weight block")

    rep = header.get("final_report")
    report = None
    if rep is not None:
        report = AnglePenaltyReport(rep["penalty"], np.array(rep["angles_deg"]), rep["max_deviation_deg"])
    return TrainedModel(
        spec, Weights(mats, biases), stats, config,
        TrainHistory.from_list(header.get("history", [])),
        bool(header.get("converged", False)), report,
    )


def load_checkpoint(path) -> TrainedModel:
    return parse_checkpoint(Path(path).read_bytes())
