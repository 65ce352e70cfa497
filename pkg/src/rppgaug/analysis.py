"""Band-pass filtering, spectral heart-rate estimation and evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import lfilter, lfilter_zi

from .core import InputError, ParameterError, SignalTrace

UNDEFINED = "undefined"


@dataclass(frozen=True)
class FilterConfig:
    order: int = 2
    low_hz: float = 0.75
    high_hz: float = 2.5
    zero_phase: bool = True

    def check(self, fps: float) -> None:
        if self.order < 1:
            raise ParameterError(f"filter order must be >= 1, got {self.order}")
        if not 0 < self.low_hz < self.high_hz:
            raise ParameterError(f"need 0 < low_hz < high_hz, got {self.low_hz}, {self.high_hz}")
        if self.high_hz >= fps / 2.0:
            raise ParameterError(f"high cutoff {self.high_hz} Hz >= Nyquist {fps / 2.0} Hz")


@dataclass(frozen=True)
class HrEstimate:
    bpm: float
    peak_bin: int
    resolution_bpm: float


def butter_bandpass_coeffs(order: int, low_hz: float, high_hz: float, fps: float):
    """Digital Butterworth band-pass ``(b, a)``.

    The analog low-pass prototype of the given order is shifted to a
    band-pass around pre-warped edges and mapped with the bilinear transform,
    so the result has ``2 * order + 1`` taps.
    """
    FilterConfig(order, low_hz, high_hz).check(fps)
    fs2 = 2.0 * fps
    w_lo = fs2 * math.tan(math.pi * low_hz / fps)
    w_hi = fs2 * math.tan(math.pi * high_hz / fps)
    bw = w_hi - w_lo
    w0_sq = w_lo * w_hi

    k = np.arange(1, order + 1)
    proto = np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))

    # s -> (s^2 + w0^2) / (bw s): each prototype pole splits into a pair
    half = proto * bw / 2.0
    disc = np.sqrt(half ** 2 - w0_sq + 0j)
    poles = np.concatenate([half + disc, half - disc])
    gain = bw ** order

    z_poles = (fs2 + poles) / (fs2 - poles)
    # `order` zeros at s = 0 -> z = 1; `order` zeros at infinity -> z = -1
    z_zeros = np.concatenate([np.ones(order), -np.ones(order)])
    z_gain = gain * np.real(fs2 ** order / np.prod(fs2 - poles))

    b = z_gain * np.real(np.poly(z_zeros))
    a = np.real(np.poly(z_poles))
    return b, a


def _zero_phase(b: np.ndarray, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    padlen = min(3 * (max(len(a), len(b)) - 1), x.size - 1)
    if padlen > 0:
        left = 2 * x[0] - x[padlen:0:-1]
        right = 2 * x[-1] - x[-2:-padlen - 2:-1]
        ext = np.concatenate([left, x, right])
    else:
        ext = x
    zi = lfilter_zi(b, a)
    y, _ = lfilter(b, a, ext, zi=zi * ext[0])
    y, _ = lfilter(b, a, y[::-1], zi=zi * y[-1])
    y = y[::-1]
    return y[padlen:ext.size - padlen] if padlen > 0 else y


def butterworth_bandpass(trace: SignalTrace, cfg: FilterConfig = FilterConfig()) -> SignalTrace:
    """Band-pass the trace; zero-phase (forward-backward) unless disabled."""
    cfg.check(trace.fps)
    n = len(trace)
    if n <= 3 * (cfg.order + 1):
        raise InputError(f"trace of length {n} too short for an order-{cfg.order} filter")
    b, a = butter_bandpass_coeffs(cfg.order, cfg.low_hz, cfg.high_hz, trace.fps)
    x = np.asarray(trace.values, dtype=np.float64)
    y = _zero_phase(b, a, x) if cfg.zero_phase else lfilter(b, a, x)
    return trace.replace(y)


def estimate_hr_fft(trace: SignalTrace, band=(0.75, 2.5), pad_factor: int = 1,
                    window: Optional[str] = None) -> HrEstimate:
    """Heart rate from the largest in-band magnitude of the trace spectrum."""
    x = np.asarray(trace.values, dtype=np.float64)
    if x.size < 2:
        raise InputError("need at least two samples")
    if pad_factor < 1:
        raise ParameterError(f"pad_factor must be >= 1, got {pad_factor}")
    if window == "hann":
        x = x * np.hanning(x.size)
    elif window is not None:
        raise ParameterError(f"unknown window {window!r}")
    n_fft = x.size * int(pad_factor)
    spectrum = np.abs(np.fft.rfft(x, n=n_fft))
    bins = np.arange(spectrum.size)
    freqs = bins * trace.fps / n_fft
    in_band = (freqs >= band[0]) & (freqs <= band[1])
    if not in_band.any():
        raise InputError(f"no FFT bin inside {band} Hz at n_fft={n_fft}, fps={trace.fps}")
    candidates = bins[in_band]
    peak = int(candidates[np.argmax(spectrum[in_band])])
    resolution = 60.0 * trace.fps / n_fft
    return HrEstimate(bpm=peak * resolution, peak_bin=peak, resolution_bpm=resolution)


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    rmse: float
    mape: Optional[float]
    pearson: Optional[float]
    n: int

    def to_dict(self) -> dict:
        def fmt(v):
            return UNDEFINED if v is None else float(v)
        return {"mae": fmt(self.mae), "rmse": fmt(self.rmse), "mape": fmt(self.mape),
                "pearson": fmt(self.pearson), "n": int(self.n)}


def compute_metrics(pred, ref) -> MetricsReport:
    """MAE / RMSE / MAPE (%) / Pearson between predicted and reference bpm.

    MAPE is ``None`` if any reference value is zero; Pearson is ``None`` if
    either vector is constant or has fewer than two entries.
    """
    p = np.asarray(pred, dtype=np.float64).ravel()
    r = np.asarray(ref, dtype=np.float64).ravel()
    if p.size != r.size:
        raise InputError(f"length mismatch: {p.size} predictions vs {r.size} references")
    if p.size == 0:
        raise InputError("need at least one pair")
    err = p - r
    mae = float(np.mean(np.abs(err)))
    rmse = float(math.sqrt(np.mean(err ** 2)))
    mape = None if np.any(r == 0) else float(100.0 * np.mean(np.abs(err) / np.abs(r)))
    pearson = None
    if p.size >= 2:
        pc = p - p.mean()
        rc = r - r.mean()
        denom = math.sqrt(float(np.dot(pc, pc)) * float(np.dot(rc, rc)))
        if denom > 0:
            pearson = float(np.clip(np.dot(pc, rc) / denom, -1.0, 1.0))
    # equal-magnitude errors can round rmse a few ulps below mae
    return MetricsReport(mae, max(rmse, mae), mape, pearson, int(p.size))
