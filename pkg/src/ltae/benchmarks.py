"""Seeded synthetic datasets used by the tests, demos and acceptance suite."""

from __future__ import annotations

import numpy as np

from .signal import (
    DEFAULT_CHANNELS,
    DEFAULT_SAMPLE_RATE_HZ,
    ChannelSynth,
    Recording,
    Sinusoid,
    SynthesisSpec,
    synthesize,
)


def mixture_spec(
    mixing: np.ndarray,
    freqs,
    duration_s: float,
    *,
    channels=DEFAULT_CHANNELS,
    offsets=None,
    source_amplitudes=None,
    phases=None,
    noise_amplitude: float = 0.0,
    condition: str = "rest",
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
) -> SynthesisSpec:
    """Channels as fixed linear mixtures of sinusoidal sources.

    Channel ``c`` is ``sum_k mixing[c, k] * (offsets[k] + amp[k] * sin(2 pi f_k t + phase_k))``.
    With equal phases per source and no noise the data matrix has rank
    ``len(freqs)`` (plus one if any offset is nonzero).
    """
    mixing = np.asarray(mixing, dtype=float)
    k = len(freqs)
    amps = np.ones(k) if source_amplitudes is None else np.asarray(source_amplitudes, float)
    offs = np.zeros(k) if offsets is None else np.asarray(offsets, float)
    ph = np.zeros(k) if phases is None else np.asarray(phases, float)
    chans = []
    for c, name in enumerate(channels):
        sins = tuple(
            Sinusoid(float(freqs[j]), float(mixing[c, j] * amps[j]), float(ph[j]))
            for j in range(k)
        )
        chans.append(ChannelSynth(name, sins, float(mixing[c] @ offs)))
    return SynthesisSpec(
        tuple(chans), duration_s, sample_rate_hz, noise_amplitude, condition,
        band_gains=(),
    )


def rank3_recording(seed: int, duration_s: float = 60.0, n_sources: int = 3) -> Recording:
    """Noiseless rank-``n_sources`` data on the default 24-channel montage."""
    mixing, freqs = _rank3_parts(seed, n_sources)
    return synthesize(mixture_spec(mixing, freqs, duration_s), seed)


def _rank3_parts(seed: int, n_sources: int = 3):
    rng = np.random.default_rng(seed)
    mixing = rng.standard_normal((len(DEFAULT_CHANNELS), n_sources))
    freqs = np.sort(rng.uniform(0.5, 12.0, n_sources))
    return mixing, freqs


def condition_pair(
    seed: int,
    model_seed: int = 0,
    duration_s: float = 60.0,
    offset: float = 0.4,
    noise_amplitude: float = 0.5,
) -> tuple[Recording, Recording]:
    """Two task conditions built on the sources of ``rank3_recording(model_seed)``.

    The conditions differ by opposite static offsets of the sources along a
    seeded random direction and by source amplitude; both carry white sensor
    noise. Fast oscillation and noise dominate the instantaneous spread, the
    offsets set the condition centroids.
    """
    mixing, freqs = _rank3_parts(model_seed)
    rng = np.random.default_rng([seed, 7919])
    direction = rng.standard_normal(len(freqs))
    direction /= np.linalg.norm(direction)
    recs = []
    for k, (tag, sign, amp) in enumerate((("low", 1.0, 1.3), ("high", -1.0, 0.7))):
        spec = mixture_spec(
            mixing, freqs, duration_s,
            offsets=sign * offset * direction,
            source_amplitudes=np.full(len(freqs), amp),
            noise_amplitude=noise_amplitude,
            condition=tag,
        )
        recs.append(synthesize(spec, seed * 2 + k))
    return recs[0], recs[1]
