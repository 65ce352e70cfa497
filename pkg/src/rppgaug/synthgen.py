"""Synthetic pulse videos with a known heart rate, and a minimal pulse extractor.

A generated clip is a flat skin patch whose colour oscillates at the target
heart rate with green-dominant channel weights; the label trace is the same
unit sinusoid.  ``oracle_extract`` recovers a pulse waveform from the video
by spatial averaging, standing in for a trained predictor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (FRAME_DTYPE, HR_MAX_BPM, HR_MIN_BPM, ParameterError, Sample, SignalTrace,
                   VideoClip, as_generator)
from .video_ops import camera_noise, resample_frames

CHANNEL_WEIGHTS = (0.3, 1.0, 0.6)
BACKGROUND = 0.05


@dataclass(frozen=True)
class SynthConfig:
    hr_bpm: float = 72.0
    fps: float = 30.0
    duration_s: float = 60.0
    size: int = 72
    pulse_amplitude: float = 0.01
    base_color: tuple[float, float, float] = (0.6, 0.45, 0.35)
    motion_drift_px_per_s: Optional[tuple[float, float]] = None
    sensor_noise: Optional[tuple[float, float]] = None
    # (top, left, height, width) as fractions of the frame; None = whole frame
    face_box: Optional[tuple[float, float, float, float]] = None

    @property
    def n_frames(self) -> int:
        return int(round(self.fps * self.duration_s))

    def check(self) -> None:
        if not HR_MIN_BPM <= self.hr_bpm <= HR_MAX_BPM:
            raise ParameterError(f"hr_bpm {self.hr_bpm} outside [{HR_MIN_BPM}, {HR_MAX_BPM}]")
        if not self.fps > 0:
            raise ParameterError("fps must be positive")
        if self.n_frames < 2:
            raise ParameterError("clip must have at least two frames")
        if self.size < 1:
            raise ParameterError("size must be >= 1")
        if not 0.0 <= self.pulse_amplitude <= 0.05:
            raise ParameterError(f"pulse_amplitude {self.pulse_amplitude} outside [0, 0.05]")
        base = np.asarray(self.base_color, dtype=float)
        if base.shape != (3,) or base.min() < 0 or base.max() > 1:
            raise ParameterError("base_color must be an RGB triple in [0, 1]")
        if self.pulse_amplitude + base.max() > 1:
            raise ParameterError("pulse_amplitude + max(base_color) exceeds 1")
        if self.sensor_noise is not None and min(self.sensor_noise) < 0:
            raise ParameterError("sensor noise variances must be >= 0")
        if self.face_box is not None:
            top, left, height, width = self.face_box
            if not (0 <= top and 0 <= left and height > 0 and width > 0
                    and top + height <= 1 and left + width <= 1):
                raise ParameterError(f"face_box {self.face_box} must lie inside the unit square")


def pulse_wave(n: int, fps: float, hr_bpm: float) -> np.ndarray:
    t = np.arange(n, dtype=np.float64)
    return np.sin(2.0 * np.pi * (hr_bpm / 60.0) * t / fps)


def _skin_mask(cfg: SynthConfig) -> np.ndarray:
    mask = np.zeros((cfg.size, cfg.size), dtype=bool)
    if cfg.face_box is None:
        mask[:] = True
        return mask
    top, left, height, width = cfg.face_box
    r0, c0 = int(round(top * cfg.size)), int(round(left * cfg.size))
    r1 = max(r0 + 1, int(round((top + height) * cfg.size)))
    c1 = max(c0 + 1, int(round((left + width) * cfg.size)))
    mask[r0:r1, c0:c1] = True
    return mask


def _apply_drift(frames: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    dx_rate, dy_rate = cfg.motion_drift_px_per_s
    h = w = cfg.size
    gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
    out = np.empty_like(frames)
    for t in range(frames.shape[0]):
        shift_x = dx_rate * t / cfg.fps
        shift_y = dy_rate * t / cfg.fps
        out[t:t + 1] = resample_frames(frames[t:t + 1], gx - shift_x, gy - shift_y, BACKGROUND)
    return out


def generate_sample(cfg: SynthConfig, rng=None, sample_id: str = "synth") -> Sample:
    """Render a synthetic pulse clip and its label trace."""
    cfg.check()
    n = cfg.n_frames
    wave = pulse_wave(n, cfg.fps, cfg.hr_bpm)
    colour = (np.asarray(cfg.base_color)[None, :]
              + cfg.pulse_amplitude * wave[:, None] * np.asarray(CHANNEL_WEIGHTS)[None, :])
    colour = np.clip(colour, 0.0, 1.0).astype(FRAME_DTYPE)

    mask = _skin_mask(cfg)
    frames = np.empty((n, cfg.size, cfg.size, 3), dtype=FRAME_DTYPE)
    frames[:] = FRAME_DTYPE(BACKGROUND)
    frames[:, mask, :] = colour[:, None, :]

    if cfg.motion_drift_px_per_s is not None and any(cfg.motion_drift_px_per_s):
        frames = _apply_drift(frames, cfg)
    clip = VideoClip(frames, cfg.fps)
    if cfg.sensor_noise is not None and any(cfg.sensor_noise):
        if rng is None:
            raise ParameterError("sensor noise requires an rng")
        clip = camera_noise(clip, cfg.sensor_noise[0], cfg.sensor_noise[1], as_generator(rng))
    return Sample(clip, SignalTrace(wave, cfg.fps), sample_id, float(cfg.hr_bpm))


def oracle_extract(sample: Sample) -> SignalTrace:
    """Mean-subtracted green-channel average over the central half of each frame."""
    frames = sample.clip.frames
    if frames.shape[-1] != 3:
        raise ParameterError("oracle_extract needs a 3-channel clip")
    _, h, w, _ = frames.shape
    r0, c0 = h // 4, w // 4
    r1, c1 = max(r0 + 1, r0 + h // 2), max(c0 + 1, c0 + w // 2)
    green = frames[:, r0:r1, c0:c1, 1].astype(np.float64).mean(axis=(1, 2))
    return SignalTrace(green - green.mean(), sample.clip.fps)
