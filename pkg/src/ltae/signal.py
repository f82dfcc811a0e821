"""Multichannel recordings: ingestion, normalization and synthesis.

A :class:`Recording` is an immutable ``(frames, channels)`` float matrix plus
channel metadata. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    EmptyInputError,
    InsufficientDataError,
    MissingReferenceChannelError,
    ParameterError,
    ParseError,
    ShapeError,
)

DEFAULT_SAMPLE_RATE_HZ = 300.0
DEGENERATE_STD = 1e-12

# 19 scalp electrodes, two ear references, three peripheral signals.
DEFAULT_CHANNELS = (
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8",
    "T3", "C3", "Cz", "C4", "T4",
    "T5", "P3", "Pz", "P4", "T6", "O1", "O2",
    "A1", "A2", "ECG", "EDA", "RR",
)


class ChannelKind(str, enum.Enum):
    EEG = "EEG"
    ECG = "ECG"
    EDA = "EDA"
    RR = "RR"
    REF = "REF"


@dataclass(frozen=True)
class ChannelId:
    name: str
    kind: ChannelKind

    @classmethod
    def from_name(cls, name: str) -> "ChannelId":
        return cls(name, infer_kind(name))


def infer_kind(name: str) -> ChannelKind:
    key = name.strip().upper()
    if key in ("A1", "A2"):
        return ChannelKind.REF
    if key in ("ECG", "EDA", "RR"):
        return ChannelKind(key)
    return ChannelKind.EEG


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NormalizationStats:
    """Per-channel mean and (population) standard deviation.

    ``degenerate`` marks constant channels (std below 1e-12, or at round-off
    level for the channel's magnitude); their stored std is 1.0.
    """

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(self.mean).reshape(-1))
        object.__setattr__(self, "std", _frozen(self.std).reshape(-1))
        if self.mean.shape != self.std.shape:
            raise ShapeError("mean and std must have the same length")
        if np.any(self.std <= 0) or not np.all(np.isfinite(self.std)):
            raise ParameterError("std values must be finite and strictly positive")
        deg = self.degenerate
        deg = np.zeros(self.mean.shape, bool) if deg is None else np.array(deg, bool)
        deg.setflags(write=False)
        object.__setattr__(self, "degenerate", deg)

    @property
    def n_channels(self) -> int:
        return self.mean.shape[0]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.mean.astype("<f8").tobytes())
        h.update(self.std.astype("<f8").tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, NormalizationStats):
            return NotImplemented
        return (
            np.array_equal(self.mean, other.mean)
            and np.array_equal(self.std, other.std)
            and np.array_equal(self.degenerate, other.degenerate)
        )

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "degenerate": self.degenerate.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(np.array(d["mean"]), np.array(d["std"]), np.array(d["degenerate"]))


@dataclass(frozen=True, eq=False)
class Recording:
    """Rectangular multichannel time series.

    ``normalization`` is set by :func:`normalize` and records which stats
    produced the values; raw recordings carry ``None``.
    """

    frames: np.ndarray
    channels: tuple[ChannelId, ...]
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    normalization: NormalizationStats | None = None
    condition: str | None = None

    def __post_init__(self):
        chans = tuple(
            c if isinstance(c, ChannelId) else ChannelId.from_name(c) for c in self.channels
        )
        object.__setattr__(self, "channels", chans)
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim == 1 and len(chans) == 1:
            frames = frames[:, None]
        if frames.ndim != 2 or frames.shape[1] != len(chans):
            raise ShapeError(
                f"frames must be (n_frames, {len(chans)}), got {frames.shape}"
            )
        if not np.all(np.isfinite(frames)):
            raise ParseError("recording contains non-finite values")
        names = [c.name for c in chans]
        if any(not n for n in names):
            raise ParameterError("channel names must be nonempty")
        if len(set(names)) != len(names):
            raise ParameterError("channel names must be unique")
        if not self.sample_rate_hz > 0:
            raise ParameterError("sample_rate_hz must be positive")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_channels(self) -> int:
        return self.frames.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.sample_rate_hz

    @property
    def channel_names(self) -> list[str]:
        return [c.name for c in self.channels]

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.channel_names.index(name)
        except ValueError:
            raise KeyError(name) from None
        return self.frames[:, idx]

    def replace(self, **changes) -> "Recording":
        kw = dict(
            frames=self.frames,
            channels=self.channels,
            sample_rate_hz=self.sample_rate_hz,
            normalization=self.normalization,
            condition=self.condition,
        )
        kw.update(changes)
        return Recording(**kw)

    def __eq__(self, other):
        if not isinstance(other, Recording):
            return NotImplemented
        return (
            self.channels == other.channels
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.frames, other.frames)
        )


def concatenate(recordings: Sequence[Recording]) -> Recording:
    """Pool recordings with identical channel layout by stacking their frames."""
    if not recordings:
        raise EmptyInputError("nothing to concatenate")
    first = recordings[0]
    for r in recordings[1:]:
        if r.channels != first.channels or r.sample_rate_hz != first.sample_rate_hz:
            raise ShapeError("recordings differ in channel layout or sample rate")
    return first.replace(
        frames=np.concatenate([r.frames for r in recordings]), normalization=None
    )


# ---------------------------------------------------------------------------
# CSV I/O

def _meta_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def load_recording(path, expected_rate: float | None = None) -> Recording:
    """Read a CSV recording (header row of channel names, one row per frame).

    The sample rate comes from ``expected_rate``, else from a sidecar
    ``<name>.meta.json`` if present, else 300 Hz.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise EmptyInputError(f"{path}: empty file")
    reader = csv.reader(io.StringIO(text, newline=""))
    rows = [r for r in reader if r]
    header = [h.strip() for h in rows[0]]
    if len(rows) < 2:
        raise EmptyInputError(f"{path}: no data rows")
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise ParseError(
                f"{path}: row {i} has {len(row)} fields, expected {len(header)}", row=i
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {i}, column {header[j]!r}: not a number: {cell!r}",
                    row=i, column=header[j],
                ) from None
            if not math.isfinite(v):
                raise ParseError(
                    f"{path}: row {i}, column {header[j]!r}: non-finite value {cell!r}",
                    row=i, column=header[j],
                )
            data[i - 1, j] = v

    rate, condition = DEFAULT_SAMPLE_RATE_HZ, None
    meta_file = _meta_path(path)
    if meta_file.exists():
        meta = json.loads(meta_file.read_text())
        rate = float(meta.get("sample_rate_hz", rate))
        condition = meta.get("condition")
    if expected_rate is not None:
        rate = expected_rate
    return Recording(data, tuple(header), rate, condition=condition)


def save_recording(rec: Recording, path, write_meta: bool = True) -> None:
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rec.channel_names)
    for row in rec.frames:
        w.writerow([repr(float(v)) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")
    if write_meta:
        meta = {"sample_rate_hz": rec.sample_rate_hz, "condition": rec.condition}
        _meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# normalization

def compute_stats(rec: Recording) -> NormalizationStats:
    if rec.n_frames < 2:
        raise InsufficientDataError("need at least 2 frames to compute statistics")
    mean = rec.frames.mean(axis=0)
    std = rec.frames.std(axis=0)
    # a constant channel far from zero still shows round-off spread
    floor = np.maximum(DEGENERATE_STD, 8 * np.finfo(float).eps * np.abs(rec.frames).max(axis=0))
    degenerate = std < floor
    if degenerate.any():
        names = [n for n, d in zip(rec.channel_names, degenerate) if d]
        warnings.warn(f"constant channels {names}: std replaced by 1.0", stacklevel=2)
        std = np.where(degenerate, 1.0, std)
    return NormalizationStats(mean, std, degenerate)


def normalize(rec: Recording, stats: NormalizationStats) -> Recording:
    """Z-score every channel with the given stats."""
    if stats.n_channels != rec.n_channels:
        raise ShapeError(
            f"stats cover {stats.n_channels} channels, recording has {rec.n_channels}"
        )
    return rec.replace(frames=(rec.frames - stats.mean) / stats.std, normalization=stats)


def denormalize(rec: Recording, stats: NormalizationStats) -> Recording:
    if stats.n_channels != rec.n_channels:
        raise ShapeError("channel-count mismatch")
    return rec.replace(frames=rec.frames * stats.std + stats.mean, normalization=None)


def common_mode_pattern(rec: Recording, length_frames: int) -> Recording:
    """Tile the A1 samples followed by the A2 samples into every channel."""
    names = rec.channel_names
    missing = [n for n in ("A1", "A2") if n not in names]
    if missing:
        raise MissingReferenceChannelError(f"reference channels missing: {missing}")
    if length_frames < 1:
        raise ParameterError("length_frames must be positive")
    seq = np.concatenate([rec.column("A1"), rec.column("A2")])
    tiled = np.resize(seq, length_frames)
    frames = np.repeat(tiled[:, None], rec.n_channels, axis=1)
    return rec.replace(frames=frames)


# ---------------------------------------------------------------------------
# synthesis

# Gains applied to sinusoid amplitudes whose frequency lies in [lo, hi).
CONDITION_BAND_GAINS: dict[str, tuple[tuple[float, float, float], ...]] = {
    "rest": (),
    "low": ((8.0, 13.0, 1.5), (13.0, 30.0, 0.75)),
    "high": ((8.0, 13.0, 0.5), (13.0, 30.0, 2.0)),
}


@dataclass(frozen=True)
class Sinusoid:
    freq_hz: float
    amplitude: float
    phase: float = 0.0


@dataclass(frozen=True)
class ChannelSynth:
    name: str
    sinusoids: tuple[Sinusoid, ...] = ()
    offset: float = 0.0


@dataclass(frozen=True)
class SynthesisSpec:
    channels: tuple[ChannelSynth, ...]
    duration_s: float
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    noise_amplitude: float = 0.0
    condition: str = "rest"
    band_gains: tuple[tuple[float, float, float], ...] | None = None

    def gains(self) -> tuple[tuple[float, float, float], ...]:
        if self.band_gains is not None:
            return self.band_gains
        return CONDITION_BAND_GAINS.get(self.condition, ())

    def to_dict(self) -> dict:
        d = {
            "channels": [
                {
                    "name": c.name,
                    "offset": c.offset,
                    "sinusoids": [
                        {"freq_hz": s.freq_hz, "amplitude": s.amplitude, "phase": s.phase}
                        for s in c.sinusoids
                    ],
                }
                for c in self.channels
            ],
            "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz,
            "noise_amplitude": self.noise_amplitude,
            "condition": self.condition,
        }
        if self.band_gains is not None:
            d["band_gains"] = [list(g) for g in self.band_gains]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisSpec":
        try:
            channels = tuple(
                ChannelSynth(
                    c["name"],
                    tuple(
                        Sinusoid(float(s["freq_hz"]), float(s["amplitude"]),
                                 float(s.get("phase", 0.0)))
                        for s in c.get("sinusoids", ())
                    ),
                    float(c.get("offset", 0.0)),
                )
                for c in d["channels"]
            )
            gains = d.get("band_gains")
            return cls(
                channels=channels,
                duration_s=float(d["duration_s"]),
                sample_rate_hz=float(d.get("sample_rate_hz", DEFAULT_SAMPLE_RATE_HZ)),
                noise_amplitude=float(d.get("noise_amplitude", 0.0)),
                condition=str(d.get("condition", "rest")),
                band_gains=None if gains is None else tuple(tuple(map(float, g)) for g in gains),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"invalid synthesis spec: {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "SynthesisSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _gain(freq: float, gains) -> float:
    g = 1.0
    for lo, hi, k in gains:
        if lo <= freq < hi:
            g *= k
    return g


def synthesize(spec: SynthesisSpec, seed: int) -> Recording:
    """Sum of sinusoids plus seeded white Gaussian noise, per channel.

    The condition tag scales sinusoid amplitudes band by band (see
    ``CONDITION_BAND_GAINS``), so conditions differ in band power.
    """
    if not spec.duration_s > 0:
        raise ParameterError("duration_s must be positive")
    if not spec.sample_rate_hz > 0:
        raise ParameterError("sample_rate_hz must be positive")
    if spec.noise_amplitude < 0:
        raise ParameterError("noise_amplitude must be nonnegative")
    if not spec.channels:
        raise ParameterError("at least one channel required")
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    if n < 1:
        raise ParameterError("duration too short for one sample")
    t = np.arange(n) / spec.sample_rate_hz
    gains = spec.gains()
    frames = np.zeros((n, len(spec.channels)))
    for j, ch in enumerate(spec.channels):
        col = frames[:, j]
        col += ch.offset
        for s in ch.sinusoids:
            col += s.amplitude * _gain(s.freq_hz, gains) * np.sin(2 * np.pi * s.freq_hz * t + s.phase)
    if spec.noise_amplitude > 0:
        rng = np.random.default_rng(seed)
        frames += spec.noise_amplitude * rng.standard_normal(frames.shape)
    return Recording(
        frames,
        tuple(c.name for c in spec.channels),
        spec.sample_rate_hz,
        condition=spec.condition,
    )
