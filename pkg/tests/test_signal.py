import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ltae.errors import (
    EmptyInputError,
    InsufficientDataError,
    MissingReferenceChannelError,
    ParameterError,
    ParseError,
    ShapeError,
)
from ltae.signal import (
    DEFAULT_CHANNELS,
    ChannelKind,
    ChannelSynth,
    NormalizationStats,
    Recording,
    Sinusoid,
    SynthesisSpec,
    common_mode_pattern,
    compute_stats,
    denormalize,
    load_recording,
    normalize,
    save_recording,
    synthesize,
)

from oracles import two_pass_std


def write(tmp_path, text, name="rec.csv"):
    p = tmp_path / name
    p.write_bytes(text.encode())
    return p


def test_load_minimal(tmp_path):
    rec = load_recording(write(tmp_path, "A1,A2,Fp1\n1,2,3\n4,5,6\n"))
    assert rec.n_channels == 3 and rec.n_frames == 2
    assert rec.channel_names == ["A1", "A2", "Fp1"]
    assert [c.kind for c in rec.channels] == [ChannelKind.REF, ChannelKind.REF, ChannelKind.EEG]
    assert rec.sample_rate_hz == 300.0
    np.testing.assert_array_equal(rec.frames, [[1, 2, 3], [4, 5, 6]])


def test_kind_inference():
    rec = Recording(np.zeros((1, 4)), ("ECG", "EDA", "RR", "Cz"))
    assert [c.kind for c in rec.channels] == [
        ChannelKind.ECG, ChannelKind.EDA, ChannelKind.RR, ChannelKind.EEG
    ]


def test_crlf_accepted(tmp_path):
    rec = load_recording(write(tmp_path, "a,b\r\n1,2\r\n3,4\r\n"))
    assert rec.frames.shape == (2, 2)


@pytest.mark.parametrize("cell", ["NaN", "inf", "-Infinity"])
def test_nonfinite_cell_rejected(tmp_path, cell):
    with pytest.raises(ParseError) as exc:
        load_recording(write(tmp_path, f"A1,A2\n1,2\n3,{cell}\n"))
    assert exc.value.row == 2 and exc.value.column == "A2"


def test_non_numeric_cell(tmp_path):
    with pytest.raises(ParseError, match="row 1"):
        load_recording(write(tmp_path, "a,b\nx,2\n"))


def test_ragged_row(tmp_path):
    with pytest.raises(ParseError) as exc:
        load_recording(write(tmp_path, "a,b\n1,2\n3\n"))
    assert exc.value.row == 2


def test_empty_file(tmp_path):
    with pytest.raises(EmptyInputError):
        load_recording(write(tmp_path, ""))


def test_duration_of_300_rows(tmp_path):
    body = "x\n" + "".join(f"{i}\n" for i in range(300))
    rec = load_recording(write(tmp_path, body))
    # 300 frames at 300 frames per second
    assert rec.n_frames == 300
    assert rec.duration_s == 1.0


def test_expected_rate_and_sidecar(tmp_path):
    p = write(tmp_path, "a\n1\n2\n")
    (tmp_path / "rec.meta.json").write_text(json.dumps({"sample_rate_hz": 250, "condition": "low"}))
    rec = load_recording(p)
    assert rec.sample_rate_hz == 250 and rec.condition == "low"
    assert load_recording(p, expected_rate=100).sample_rate_hz == 100


def test_recording_invariants():
    with pytest.raises(ShapeError):
        Recording(np.zeros((3, 2)), ("a", "b", "c"))
    with pytest.raises(ParameterError):
        Recording(np.zeros((3, 2)), ("a", "a"))
    with pytest.raises(ParameterError):
        Recording(np.zeros((3, 1)), ("a",), sample_rate_hz=0)
    rec = Recording(np.zeros((3, 1)), ("a",))
    with pytest.raises(ValueError):
        rec.frames[0, 0] = 1.0


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 5)),
              elements=st.floats(-1e300, 1e300, allow_nan=False)))
def test_save_load_roundtrip(tmp_path_factory, frames):
    path = tmp_path_factory.mktemp("rt") / "r.csv"
    rec = Recording(frames, tuple(f"c{i}" for i in range(frames.shape[1])), 123.0, condition="x")
    save_recording(rec, path)
    back = load_recording(path)
    assert back == rec
    assert back.condition == "x"
    assert np.array_equal(back.frames, frames)


def test_stats_constant_channel_flagged():
    rec = Recording(np.array([[1.0, 0.0], [1.0, 2.0], [1.0, 1.0]]), ("a", "b"))
    with pytest.warns(UserWarning, match="constant"):
        st_ = compute_stats(rec)
    assert st_.mean[0] == 1.0
    assert st_.std[0] == 1.0 and st_.degenerate[0]
    assert not st_.degenerate[1]


def test_stats_two_point():
    st_ = compute_stats(Recording(np.array([[0.0], [2.0]]), ("a",)))
    assert st_.mean[0] == 1.0 and st_.std[0] == 1.0


def test_stats_insufficient():
    with pytest.raises(InsufficientDataError):
        compute_stats(Recording(np.ones((1, 2)), ("a", "b")))


def test_stats_unit_variance_generator():
    x = np.random.default_rng(7).standard_normal(10_000)
    st_ = compute_stats(Recording(x[:, None], ("a",)))
    oracle = two_pass_std(x)
    assert abs(st_.std[0] - oracle) < 1e-12
    assert abs(st_.std[0] - 1.0) < 0.05


def test_normalize_self():
    rng = np.random.default_rng(1)
    rec = Recording(rng.normal(5, 3, (500, 4)), ("a", "b", "c", "d"))
    out = normalize(rec, compute_stats(rec))
    assert np.all(np.abs(out.frames.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(out.frames.std(axis=0) - 1) < 1e-9)
    assert out.normalization is not None


def test_normalize_identity_stats():
    rec = Recording(np.arange(6.0).reshape(3, 2), ("a", "b"))
    out = normalize(rec, NormalizationStats(np.zeros(2), np.ones(2)))
    assert np.array_equal(out.frames, rec.frames)


def test_normalize_roundtrip_foreign_stats():
    rng = np.random.default_rng(2)
    a = Recording(rng.normal(3, 2, (100, 3)), ("x", "y", "z"))
    b = Recording(rng.normal(-1, 5, (80, 3)), ("x", "y", "z"))
    st_ = compute_stats(a)
    back = denormalize(normalize(b, st_), st_)
    np.testing.assert_allclose(back.frames, b.frames, rtol=0, atol=1e-9)


def test_normalize_mismatch():
    rec = Recording(np.zeros((3, 2)), ("a", "b"))
    with pytest.raises(ShapeError):
        normalize(rec, NormalizationStats(np.zeros(3), np.ones(3)))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 40), st.integers(1, 4)),
              elements=st.floats(-1e6, 1e6)))
def test_normalized_mean_is_zero(frames):
    rec = Recording(frames, tuple(f"c{i}" for i in range(frames.shape[1])))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        stats = compute_stats(rec)
    out = normalize(rec, stats)
    # the mean itself is only representable to one ulp of the data, so the
    # bound needs a relative spread well above round-off
    ok = stats.degenerate | (stats.std > 1e-6 * np.abs(frames).max(axis=0))
    assert np.all(np.abs(out.frames.mean(axis=0))[ok] < 1e-9)


def _ref_rec():
    return Recording(np.array([[1.0, 3.0, 9.0], [2.0, 4.0, 9.0]]), ("A1", "A2", "Cz"))


def test_common_mode_single_tile():
    out = common_mode_pattern(_ref_rec(), 4)
    assert np.array_equal(out.frames, np.repeat([[1.0], [2], [3], [4]], 3, axis=1))


def test_common_mode_wraparound():
    out = common_mode_pattern(_ref_rec(), 6)
    for k in range(3):
        assert out.frames[:, k].tolist() == [1, 2, 3, 4, 1, 2]


def test_common_mode_index_arithmetic():
    rng = np.random.default_rng(3)
    n = 17
    rec = Recording(rng.standard_normal((n, 4)), ("Fp1", "A2", "A1", "O1"))
    out = common_mode_pattern(rec, 2 * n)
    a1, a2 = rec.frames[:, 2], rec.frames[:, 1]
    for t in range(2 * n):
        expected = a1[t] if t < n else a2[t - n]
        assert np.all(out.frames[t] == expected)


def test_common_mode_missing_reference():
    rec = Recording(np.zeros((2, 2)), ("A1", "Cz"))
    with pytest.raises(MissingReferenceChannelError):
        common_mode_pattern(rec, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(1, 100), st.integers(0, 2**31))
def test_common_mode_columns_identical(n, length, seed):
    rec = Recording(np.random.default_rng(seed).standard_normal((n, 3)), ("A1", "A2", "Pz"))
    out = common_mode_pattern(rec, length)
    assert out.n_frames == length
    assert np.all(out.frames == out.frames[:, :1])


def _sine_spec(noise=0.0, name="Cz", sinusoids=(Sinusoid(1.0, 1.0),)):
    return SynthesisSpec((ChannelSynth(name, sinusoids),), duration_s=1.0, noise_amplitude=noise)


def test_synth_closed_form():
    rec = synthesize(_sine_spec(), seed=0)
    t = np.arange(300) / 300.0
    assert rec.n_frames == 300
    assert np.max(np.abs(rec.frames[:, 0] - np.sin(2 * np.pi * t))) < 1e-12


def test_synth_deterministic():
    spec = _sine_spec(noise=0.3)
    a, b = synthesize(spec, 11), synthesize(spec, 11)
    assert np.array_equal(a.frames, b.frames)
    assert not np.array_equal(a.frames, synthesize(spec, 12).frames)


def test_synth_noise_level():
    spec = SynthesisSpec((ChannelSynth("n"),), duration_s=100.0, noise_amplitude=0.4)
    rec = synthesize(spec, 5)
    assert rec.n_frames == 30_000
    assert abs(two_pass_std(rec.frames[:, 0]) / 0.4 - 1) < 0.05


@pytest.mark.parametrize("kw", [dict(duration_s=0.0), dict(duration_s=-1.0), dict(sample_rate_hz=0.0)])
def test_synth_bad_parameters(kw):
    base = dict(channels=(ChannelSynth("a"),), duration_s=1.0)
    base.update(kw)
    with pytest.raises(ParameterError):
        synthesize(SynthesisSpec(**base), 0)


def _band_power(x, rate, lo, hi):
    f = np.fft.rfftfreq(len(x), 1 / rate)
    p = np.abs(np.fft.rfft(x)) ** 2
    return p[(f >= lo) & (f < hi)].sum()


def test_condition_changes_band_power():
    sins = (Sinusoid(10.0, 1.0), Sinusoid(20.0, 1.0))
    ratios = {}
    for cond in ("low", "high"):
        spec = SynthesisSpec((ChannelSynth("Cz", sins),), 4.0, condition=cond)
        x = synthesize(spec, 0).frames[:, 0]
        ratios[cond] = _band_power(x, 300, 13, 30) / _band_power(x, 300, 8, 13)
    # beta/alpha power ratio is a linear separator between the two conditions
    assert ratios["high"] > 4 * ratios["low"]


def test_spec_json_roundtrip(tmp_path):
    spec = SynthesisSpec(
        tuple(ChannelSynth(n, (Sinusoid(2.0, 0.5, 0.1),), 0.25) for n in DEFAULT_CHANNELS),
        duration_s=2.0, noise_amplitude=0.1, condition="high",
    )
    p = tmp_path / "s.json"
    p.write_text(json.dumps(spec.to_dict()))
    assert SynthesisSpec.from_json(p) == spec


def test_spec_json_invalid():
    with pytest.raises(ParameterError):
        SynthesisSpec.from_dict({"duration_s": 1})
