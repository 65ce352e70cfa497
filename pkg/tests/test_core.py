import numpy as np
import pytest

from rppgaug.core import (ParameterError, Sample, SeededRng, SignalTrace, VideoClip, derive_rng,
                          validate_sample)

from conftest import make_sample


def codes(s):
    return [v.code for v in validate_sample(s)]


def test_valid_sample_has_no_violations():
    assert validate_sample(make_sample(t=180)) == []


def test_length_mismatch_reported_once():
    s = make_sample(t=180)
    bad = Sample(s.clip, SignalTrace(s.trace.values[:179], 30.0), "x")
    assert codes(bad) == ["length-mismatch"]


def test_nan_pixel_reported_once():
    s = make_sample(t=180)
    frames = s.clip.frames.copy()
    frames[3, 2, 1, 0] = np.nan
    assert codes(s.with_clip(VideoClip(frames, 30.0))) == ["non-finite-pixel"]


@pytest.mark.parametrize("mutate, code", [
    (lambda f: f[:1], "too-few-frames"),
    (lambda f: np.concatenate([f, f[..., :1]], axis=-1), "bad-channels"),
    (lambda f: f + 1.5, "pixel-out-of-range"),
])
def test_other_clip_violations(mutate, code):
    s = make_sample(t=4)
    frames = mutate(s.clip.frames.copy())
    trace = SignalTrace(np.zeros(frames.shape[0]), 30.0)
    assert code in codes(Sample(VideoClip(frames, 30.0), trace))


def test_reference_hr_band_and_fps():
    s = make_sample(t=4)
    assert codes(Sample(s.clip, s.trace, "x", 160.0)) == ["reference-hr-out-of-band"]
    assert codes(Sample(s.clip, s.trace, "x", 45.0)) == []
    assert "bad-fps" in codes(Sample(VideoClip(s.clip.frames, 0.0), SignalTrace(s.trace.values, 0.0)))


def test_arrays_are_read_only(sample):
    with pytest.raises(ValueError):
        sample.clip.frames[0, 0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        sample.trace.values[0] = 1.0


def test_derive_rng_same_tuple_identical():
    a = derive_rng(7, "augment", 3, 2).random(1024)
    b = derive_rng(7, "augment", 3, 2).random(1024)
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("other", [(7, "augment", 3, 1), (7, "augment", 2, 2), (7, "other", 3, 2),
                                   (8, "augment", 3, 2)])
def test_derive_rng_distinct_tuples_differ(other):
    a = derive_rng(7, "augment", 3, 2).random(1024)
    b = derive_rng(*other).random(1024)
    assert not np.array_equal(a, b)


def test_derive_rng_independent_of_call_order():
    first = [derive_rng(1, "s", i, 0).random() for i in range(5)]
    second = [derive_rng(1, "s", i, 0).random() for i in reversed(range(5))][::-1]
    assert first == second


def test_uniform_mean():
    x = derive_rng(12345, "moments", 0, 0).random(10**6)
    assert abs(x.mean() - 0.5) < 0.002


def test_seed_range_enforced():
    with pytest.raises(ParameterError):
        SeededRng(-1)
    with pytest.raises(ParameterError):
        SeededRng(2**64)
    SeededRng(2**64 - 1).child("x").generator().random()


def test_nested_stream_paths():
    root = SeededRng(3)
    a = root.child("a", 0, 0).child("frame", 5, 0).generator().random(8)
    b = root.child("a", 0, 0).child("frame", 6, 0).generator().random(8)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, root.child("a", 0, 0).child("frame", 5, 0).generator().random(8))
