"""Data preparation: central crop, bilinear resize, difference frames, chunking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FRAME_DTYPE, InputError, ParameterError, Sample, VideoClip

DIFF_EPS = 1e-7


@dataclass(frozen=True)
class PreprocessConfig:
    crop: int = 240
    resize: int = 72
    chunk_len: int = 180
    diff_mode: str = "plain"

    def __post_init__(self):
        if self.resize < 1:
            raise ParameterError(f"resize must be >= 1, got {self.resize}")
        if self.chunk_len < 2:
            raise ParameterError(f"chunk_len must be >= 2, got {self.chunk_len}")
        if self.diff_mode not in ("plain", "normalized", "none"):
            raise ParameterError(f"diff_mode must be plain, normalized or none, got {self.diff_mode!r}")


def center_crop(clip: VideoClip, side: int) -> VideoClip:
    _, h, w, _ = clip.frames.shape
    if not 1 <= side <= min(h, w):
        raise ParameterError(f"crop side {side} does not fit a {h}x{w} frame")
    top = (h - side) // 2
    left = (w - side) // 2
    if side == h == w:
        return clip
    return clip.replace(clip.frames[:, top:top + side, left:left + side, :].copy())


def _axis_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) linear-interpolation matrix, half-pixel centres."""
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(mat, (rows, i0), 1.0 - frac)
    np.add.at(mat, (rows, i1), frac)
    return mat


def resize_bilinear(clip: VideoClip, side: int) -> VideoClip:
    """Resize every frame to ``side x side`` (align-corners-false bilinear)."""
    if side < 1:
        raise ParameterError(f"resize side must be >= 1, got {side}")
    _, h, w, _ = clip.frames.shape
    if h == w == side:
        return clip
    ry = _axis_weights(h, side)
    rx = _axis_weights(w, side)
    out = np.empty((clip.n_frames, side, side, clip.frames.shape[3]), dtype=FRAME_DTYPE)
    for start in range(0, clip.n_frames, 64):
        block = clip.frames[start:start + 64].astype(np.float64)
        res = np.einsum("yh,thwc,xw->tyxc", ry, block, rx, optimize=True)
        out[start:start + block.shape[0]] = np.clip(res, 0.0, 1.0)
    return clip.replace(out)


def difference_frames(clip: VideoClip, diff_mode: str = "plain") -> VideoClip:
    """``x[t+1] - x[t]`` (plain) or that over ``x[t+1] + x[t] + eps`` (normalized)."""
    frames = clip.frames
    if frames.shape[0] < 2:
        raise InputError("difference frames need at least two frames")
    nxt, cur = frames[1:], frames[:-1]
    if diff_mode == "plain":
        d = nxt - cur
    elif diff_mode == "normalized":
        d = (nxt - cur) / (nxt + cur + FRAME_DTYPE(DIFF_EPS))
    else:
        raise ParameterError(f"unknown diff_mode {diff_mode!r}")
    return clip.replace(d)


def difference_sample(sample: Sample, diff_mode: str = "plain") -> Sample:
    """Difference the clip and drop the first label so frame t pairs with trace t+1."""
    clip = difference_frames(sample.clip, diff_mode)
    trace = sample.trace.replace(sample.trace.values[1:])
    return Sample(clip, trace, sample.id, sample.reference_hr)


def chunk(sample: Sample, chunk_len: int = 180) -> list[Sample]:
    """Split into non-overlapping windows; a short trailing remainder is dropped."""
    if chunk_len < 2:
        raise ParameterError(f"chunk_len must be >= 2, got {chunk_len}")
    t = sample.clip.n_frames
    n = t // chunk_len
    out = []
    for i in range(n):
        sl = slice(i * chunk_len, (i + 1) * chunk_len)
        out.append(Sample(
            sample.clip.replace(sample.clip.frames[sl]),
            sample.trace.replace(sample.trace.values[sl]),
            f"{sample.id}_c{i:03d}",
            sample.reference_hr,
        ))
    return out


def preprocess_sample(sample: Sample, cfg: PreprocessConfig) -> Sample:
    """Crop and resize; then difference unless ``diff_mode == 'none'``."""
    clip = resize_bilinear(center_crop(sample.clip, cfg.crop), cfg.resize)
    out = sample.with_clip(clip)
    if cfg.diff_mode != "none":
        out = difference_sample(out, cfg.diff_mode)
    return out
