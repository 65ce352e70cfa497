import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal as ss
from scipy import stats

from rppgaug.analysis import (FilterConfig, butter_bandpass_coeffs, butterworth_bandpass,
                              compute_metrics, estimate_hr_fft)
from rppgaug.core import InputError, ParameterError, SignalTrace

FPS = 30.0


def sine(freq, n, fps=FPS, amp=1.0):
    return SignalTrace(amp * np.sin(2 * np.pi * freq * np.arange(n) / fps), fps)


def central_amplitude(y, freq, fps=FPS, margin_s=5.0):
    m = int(margin_s * fps)
    seg = y[m:-m]
    t = np.arange(m, m + seg.size) / fps
    basis = np.stack([np.sin(2 * np.pi * freq * t), np.cos(2 * np.pi * freq * t)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, seg, rcond=None)
    return float(np.hypot(*coef))


def reference_gain(freq, fps=FPS):
    """Zero-phase gain |H|^2 from an independent filter design."""
    b, a = ss.butter(2, [0.75, 2.5], btype="bandpass", fs=fps)
    _, h = ss.freqz(b, a, worN=[freq], fs=fps)
    return float(abs(h[0]) ** 2)


def test_coefficients_match_reference_design():
    for fps in (25.0, 30.0, 60.0):
        b, a = butter_bandpass_coeffs(2, 0.75, 2.5, fps)
        rb, ra = ss.butter(2, [0.75, 2.5], btype="bandpass", fs=fps)
        assert len(b) == len(a) == 5
        assert np.allclose(b, rb, atol=1e-12) and np.allclose(a, ra, atol=1e-12)


def test_dc_is_rejected():
    out = butterworth_bandpass(SignalTrace(np.full(900, 3.0), FPS)).values
    assert np.max(np.abs(out[30:-30])) < 1e-3


@pytest.mark.parametrize("freq", [0.2, 1.0, 1.5, 2.0, 5.0])
def test_gain_matches_reference_response(freq):
    y = butterworth_bandpass(sine(freq, 900)).values
    assert central_amplitude(y, freq) == pytest.approx(reference_gain(freq), abs=0.01)


def test_passband_and_stopband_bounds():
    assert abs(central_amplitude(butterworth_bandpass(sine(1.5, 900)).values, 1.5) - 1.0) < 0.05
    assert central_amplitude(butterworth_bandpass(sine(0.2, 900)).values, 0.2) < 0.1
    assert central_amplitude(butterworth_bandpass(sine(5.0, 900)).values, 5.0) < 0.1


def test_zero_phase_has_no_lag():
    x = sine(1.5, 900)
    y = butterworth_bandpass(x).values
    lags = np.arange(-10, 11)
    xc = [np.dot(x.values[100:-100], np.roll(y, -k)[100:-100]) for k in lags]
    assert lags[int(np.argmax(xc))] == 0
    causal = butterworth_bandpass(x, FilterConfig(zero_phase=False)).values
    assert causal.shape == x.values.shape
    assert not np.allclose(causal, y)


def test_filter_errors():
    with pytest.raises(InputError):
        butterworth_bandpass(SignalTrace(np.zeros(9), FPS))
    butterworth_bandpass(SignalTrace(np.random.default_rng(0).normal(size=10), FPS))
    with pytest.raises(ParameterError):
        butterworth_bandpass(SignalTrace(np.zeros(100), 4.0))
    with pytest.raises(ParameterError):
        butterworth_bandpass(sine(1.0, 100), FilterConfig(low_hz=2.0, high_hz=1.0))


def test_hr_exact_bins():
    est = estimate_hr_fft(sine(1.5, 180))
    assert est.bpm == 90.0 and est.peak_bin == 9 and est.resolution_bpm == 10.0
    assert estimate_hr_fft(sine(1.0, 180)).bpm == 60.0
    assert estimate_hr_fft(sine(1.5, 180, amp=1.25)).bpm == 90.0


def test_hr_band_restriction_and_padding():
    # a stronger out-of-band tone must not win
    x = sine(0.5, 600).values * 5 + sine(2.0, 600).values
    assert estimate_hr_fft(SignalTrace(x, FPS)).bpm == 120.0
    padded = estimate_hr_fft(sine(1.3, 180), pad_factor=8)
    assert padded.resolution_bpm == 1.25
    assert abs(padded.bpm - 78.0) <= 1.25
    assert estimate_hr_fft(sine(1.5, 180), window="hann").bpm == 90.0
    with pytest.raises(InputError):
        estimate_hr_fft(SignalTrace(np.zeros(4), FPS), band=(0.75, 2.5))
    with pytest.raises(ParameterError):
        estimate_hr_fft(sine(1.0, 30), window="kaiser")


def test_wander_removed_before_peak_picking():
    x = sine(1.7, 1800).values + 0.2 * np.sin(2 * np.pi * 0.4 * np.arange(1800) / FPS)
    est = estimate_hr_fft(butterworth_bandpass(SignalTrace(x, FPS)))
    assert est.bpm == 102.0


def exact_metrics(pred, ref):
    p = [Fraction(v) for v in pred]
    r = [Fraction(v) for v in ref]
    n = len(p)
    mae = sum(abs(a - b) for a, b in zip(p, r)) / n
    mse = sum((a - b) ** 2 for a, b in zip(p, r)) / n
    mape = 100 * sum(abs(a - b) / b for a, b in zip(p, r)) / n
    mp, mr = sum(p) / n, sum(r) / n
    cov = sum((a - mp) * (b - mr) for a, b in zip(p, r))
    vp = sum((a - mp) ** 2 for a in p)
    vr = sum((b - mr) ** 2 for b in r)
    return float(mae), math.sqrt(mse), float(mape), float(cov) / math.sqrt(float(vp * vr))


def test_metrics_worked_example():
    m = compute_metrics([72, 75, 80], [70, 80, 80])
    assert m.mae == pytest.approx(7 / 3, abs=1e-12)
    assert m.rmse == pytest.approx(math.sqrt(29 / 3), abs=1e-12)
    assert m.mape == pytest.approx(100 / 3 * (2 / 70 + 5 / 80), abs=1e-12)
    assert m.mape == pytest.approx(3.036, abs=5e-4)
    assert m.pearson == pytest.approx(stats.pearsonr([72, 75, 80], [70, 80, 80])[0], abs=1e-12)


def test_metrics_identity_and_anticorrelation():
    ref = [60.0, 72.0, 90.0, 110.0]
    m = compute_metrics(ref, ref)
    assert (m.mae, m.rmse, m.mape, m.pearson, m.n) == (0.0, 0.0, 0.0, 1.0, 4)
    assert compute_metrics([200 - r for r in ref], ref).pearson == pytest.approx(-1.0)


def test_metrics_undefined_markers():
    m = compute_metrics([70, 71], [75, 75])
    assert m.pearson is None and m.to_dict()["pearson"] == "undefined"
    m = compute_metrics([1.0, 2.0], [0.0, 3.0])
    assert m.mape is None and m.to_dict()["mape"] == "undefined"
    assert set(m.to_dict()) == {"mae", "rmse", "mape", "pearson", "n"}
    with pytest.raises(InputError):
        compute_metrics([1, 2], [1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(30, 200), st.floats(45, 150)), min_size=1, max_size=40))
def test_mae_not_above_rmse(pairs):
    pred, ref = zip(*pairs)
    m = compute_metrics(pred, ref)
    assert m.mae <= m.rmse


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10), st.floats(-100, 100), st.integers(0, 10**6))
def test_pearson_affine_invariance(scale, shift, seed):
    rng = np.random.default_rng(seed)
    ref = rng.uniform(50, 120, 20)
    pred = ref + rng.normal(0, 5, 20)
    base = compute_metrics(pred, ref).pearson
    assert compute_metrics(scale * pred + shift, ref).pearson == pytest.approx(base, abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_metrics_against_exact_oracle(seed):
    rng = np.random.default_rng(seed)
    ref = np.round(rng.uniform(50, 130, 12), 1)
    pred = np.round(ref + rng.normal(0, 6, 12), 1)
    m = compute_metrics(pred, ref)
    mae, rmse, mape, r = exact_metrics(pred, ref)
    assert abs(m.mae - mae) < 1e-9 and abs(m.rmse - rmse) < 1e-9
    assert abs(m.mape - mape) < 1e-9 and abs(m.pearson - r) < 1e-9
