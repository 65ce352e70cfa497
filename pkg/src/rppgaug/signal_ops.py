"""Label-signal augmentations: AWGN, baseline wander, scaling, magnitude warping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .core import ParameterError, SignalTrace, as_generator

WANDER_MAX_AMPLITUDE = 0.2
WANDER_MAX_FREQ_HZ = 0.5


@dataclass(frozen=True)
class SignalOpParams:
    gaussian_variance: float = 0.5
    wander_amplitude_range: tuple[float, float] = (0.0, 0.2)
    wander_freq_range_hz: tuple[float, float] = (0.0, 0.5)
    scale_range: tuple[float, float] = (0.75, 1.25)
    warp_sigma_range: tuple[float, float] = (0.0, 0.25)
    warp_knots: int = 4

    def __post_init__(self):
        for name in ("wander_amplitude_range", "wander_freq_range_hz", "scale_range", "warp_sigma_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ParameterError(f"{name}: low {lo} > high {hi}")
        if self.gaussian_variance < 0:
            raise ParameterError("gaussian_variance must be >= 0")
        if self.warp_knots < 2:
            raise ParameterError("warp_knots must be >= 2")


def add_gaussian_noise(trace: SignalTrace, variance: float, rng) -> SignalTrace:
    """Add zero-mean white Gaussian noise with the given variance."""
    if not variance >= 0:
        raise ParameterError(f"variance must be >= 0, got {variance}")
    if variance == 0:
        return trace
    noise = as_generator(rng).normal(0.0, math.sqrt(variance), size=len(trace))
    return trace.replace(trace.values + noise)


def wander_curve(n: int, fps: float, amplitude: float, freq_hz: float, phase: float) -> np.ndarray:
    t = np.arange(n, dtype=np.float64)
    return amplitude * np.sin(2.0 * np.pi * freq_hz * t / fps + phase)


def add_baseline_wander(trace: SignalTrace, amplitude: float, freq_hz: float,
                        phase: float = 0.0, rng=None) -> SignalTrace:
    """Superimpose a slow sinusoid ``amplitude * sin(2*pi*freq_hz*t/fps + phase)``.

    ``rng`` is accepted for a uniform operator signature; all randomness lives
    in the parameters, which the pipeline draws.
    """
    if not 0.0 <= amplitude <= WANDER_MAX_AMPLITUDE:
        raise ParameterError(f"amplitude must lie in [0, {WANDER_MAX_AMPLITUDE}], got {amplitude}")
    if not 0.0 <= freq_hz <= WANDER_MAX_FREQ_HZ:
        raise ParameterError(f"freq_hz must lie in [0, {WANDER_MAX_FREQ_HZ}], got {freq_hz}")
    if not 0.0 <= phase < 2.0 * np.pi:
        raise ParameterError(f"phase must lie in [0, 2*pi), got {phase}")
    if amplitude == 0:
        return trace
    return trace.replace(trace.values + wander_curve(len(trace), trace.fps, amplitude, freq_hz, phase))


def scale_signal(trace: SignalTrace, factor: float) -> SignalTrace:
    if not np.isfinite(factor):
        raise ParameterError(f"scale factor must be finite, got {factor}")
    return trace.replace(factor * trace.values)


def warp_curve(n: int, control_points) -> np.ndarray:
    """Smooth multiplier of length ``n`` through evenly spaced control points.

    Knots sit at ``linspace(0, n - 1, k)``; interpolation is a not-a-knot
    cubic spline (linear when k == 2).
    """
    control_points = np.asarray(control_points, dtype=np.float64)
    if control_points.ndim != 1 or control_points.size < 2:
        raise ParameterError("need at least two control points")
    if np.all(control_points == control_points[0]):
        return np.full(n, control_points[0])
    knots_x = np.linspace(0.0, n - 1, control_points.size)
    return CubicSpline(knots_x, control_points)(np.arange(n, dtype=np.float64))


def magnitude_warp(trace: SignalTrace, sigma: float, knots: int = 4, rng=None,
                   *, return_curve: bool = False):
    """Multiply the trace by a smooth random curve.

    Control points are drawn i.i.d. from N(1, sigma**2).  With
    ``return_curve=True`` returns ``(trace, curve, control_points)``.
    """
    if not 0.0 < sigma <= 0.25:
        raise ParameterError(f"sigma must lie in (0, 0.25], got {sigma}")
    if knots < 2:
        raise ParameterError(f"knots must be >= 2, got {knots}")
    if len(trace) < 2:
        raise ParameterError("trace too short to warp")
    control = as_generator(rng).normal(1.0, sigma, size=knots)
    curve = warp_curve(len(trace), control)
    out = trace.replace(curve * trace.values)
    if return_curve:
        return out, curve, control
    return out
