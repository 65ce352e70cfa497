"""Frame augmentations.

Geometric operators (rotate, translate, shear, flip) resample every frame by
inverse mapping with bilinear interpolation; one parameter set applies to the
whole clip.  Coordinates are ``(x, y)`` = (column, row).  Rotation pivots on
the frame centre; translate and shear follow the plain origin-based maps;
flip mirrors about ``a = W - 1``.

Appearance operators (random erasing, brightness, saturation, camera noise)
always return values inside [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .core import FRAME_DTYPE, ParameterError, VideoClip, as_generator

GEOMETRIC_KINDS = ("rotate", "translate", "shear", "flip")
LUMA_WEIGHTS = (0.299, 0.587, 0.114)
_FRAME_BLOCK = 128


@dataclass(frozen=True)
class GeometricParams:
    theta: float = 0.0
    translate_m: float = 0.0
    shear_m: float = 0.0
    axis: str = "x"
    fill: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "axis", str(self.axis).lower())
        if self.axis not in ("x", "y"):
            raise ParameterError(f"axis must be 'x' or 'y', got {self.axis!r}")
        if not abs(self.theta) <= math.pi:
            raise ParameterError(f"|theta| must be <= pi, got {self.theta}")
        if not 0.0 <= self.fill <= 1.0:
            raise ParameterError(f"fill must lie in [0, 1], got {self.fill}")
        if not (np.isfinite(self.translate_m) and np.isfinite(self.shear_m)):
            raise ParameterError("translate_m and shear_m must be finite")


@dataclass(frozen=True)
class AppearanceParams:
    erase_size: tuple[int, int] = (7, 7)
    brightness_factor: float = 1.0
    saturation_factor: float = 1.0
    sigma_s_sq: float = 0.0004
    sigma_c_sq: float = 0.0004


# -- coordinate maps ---------------------------------------------------------

def transform_coords(kind: str, x, y, *, theta=0.0, m=0.0, axis="x", a=0.0):
    """Origin-based coordinate map of a spatial transform.

    rotate: (x cos t - y sin t, x sin t + y cos t); translate x/y: (x+m, y) /
    (x, y+m); shear x/y: (x+m y, y) / (x, m x+y); flip: (a-x, y).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if kind == "rotate":
        c, s = math.cos(theta), math.sin(theta)
        return x * c - y * s, x * s + y * c
    if kind == "translate":
        return (x + m, y + 0.0) if axis == "x" else (x + 0.0, y + m)
    if kind == "shear":
        return (x + m * y, y + 0.0) if axis == "x" else (x + 0.0, m * x + y)
    if kind == "flip":
        return a - x, y + 0.0
    raise ParameterError(f"unknown geometric kind {kind!r}; expected one of {GEOMETRIC_KINDS}")


def forward_map(kind: str, params: GeometricParams, x, y, height: int, width: int):
    """Where the pixel at (x, y) lands in an H x W frame."""
    if kind == "rotate":
        cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
        u, v = transform_coords("rotate", np.asarray(x) - cx, np.asarray(y) - cy, theta=params.theta)
        return u + cx, v + cy
    if kind == "translate":
        return transform_coords(kind, x, y, m=params.translate_m, axis=params.axis)
    if kind == "shear":
        return transform_coords(kind, x, y, m=params.shear_m, axis=params.axis)
    if kind == "flip":
        return transform_coords(kind, x, y, a=width - 1)
    return transform_coords(kind, x, y)


def inverse_map(kind: str, params: GeometricParams, x, y, height: int, width: int):
    """Source coordinate sampled for output pixel (x, y)."""
    if kind == "rotate":
        inv = GeometricParams(theta=-params.theta, fill=params.fill)
        return forward_map("rotate", inv, x, y, height, width)
    if kind == "translate":
        return transform_coords(kind, x, y, m=-params.translate_m, axis=params.axis)
    if kind == "shear":
        return transform_coords(kind, x, y, m=-params.shear_m, axis=params.axis)
    return forward_map(kind, params, x, y, height, width)


def _is_identity(kind: str, params: GeometricParams) -> bool:
    if kind == "rotate":
        return params.theta == 0.0
    if kind == "translate":
        return params.translate_m == 0.0
    if kind == "shear":
        return params.shear_m == 0.0
    return False


# -- resampling --------------------------------------------------------------

def bilinear_operator(src_x: np.ndarray, src_y: np.ndarray, height: int, width: int):
    """Sparse (H*W, H*W) interpolation matrix for the given source grid.

    Returns ``(matrix, coverage)`` where ``coverage[p]`` is the total weight
    of in-frame neighbours of output pixel ``p``; the remainder is fill.
    """
    sx = np.asarray(src_x, dtype=np.float64).ravel()
    sy = np.asarray(src_y, dtype=np.float64).ravel()
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    out_idx = np.arange(sx.size)

    rows, cols, vals = [], [], []
    for dx, dy, w in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)),
                      (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
        xi, yi = x0 + dx, y0 + dy
        keep = (w != 0) & (xi >= 0) & (xi < width) & (yi >= 0) & (yi < height)
        rows.append(out_idx[keep])
        cols.append(yi[keep] * width + xi[keep])
        vals.append(w[keep])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    n = height * width
    matrix = sparse.csr_matrix((vals.astype(FRAME_DTYPE), (rows, cols)), shape=(n, n))
    coverage = np.bincount(rows, weights=vals, minlength=n)
    return matrix, coverage


def resample_frames(frames: np.ndarray, src_x: np.ndarray, src_y: np.ndarray,
                    fill: float = 0.0) -> np.ndarray:
    """Inverse-map every frame through one (H, W) source grid."""
    t, h, w, c = frames.shape
    matrix, coverage = bilinear_operator(src_x, src_y, h, w)
    fill_term = None
    if fill != 0.0:
        fill_term = (fill * np.clip(1.0 - coverage, 0.0, 1.0)).astype(FRAME_DTYPE)[:, None]
    out = np.empty((t, h, w, c), dtype=FRAME_DTYPE)
    for start in range(0, t, _FRAME_BLOCK):
        block = frames[start:start + _FRAME_BLOCK]
        nb = block.shape[0]
        flat = np.ascontiguousarray(block.transpose(1, 2, 0, 3)).reshape(h * w, nb * c)
        res = np.asarray(matrix @ flat, dtype=FRAME_DTYPE)
        if fill_term is not None:
            res += fill_term
        out[start:start + nb] = res.reshape(h, w, nb, c).transpose(2, 0, 1, 3)
    return out


def warp_affine(clip: VideoClip, params: GeometricParams, kind: str) -> VideoClip:
    """Apply one geometric transform to all frames of ``clip``."""
    if kind not in GEOMETRIC_KINDS:
        raise ParameterError(f"unknown geometric kind {kind!r}; expected one of {GEOMETRIC_KINDS}")
    if _is_identity(kind, params):
        return clip
    _, h, w, _ = clip.frames.shape
    if kind == "flip":
        return clip.replace(clip.frames[:, :, ::-1, :].copy())
    gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
    src_x, src_y = inverse_map(kind, params, gx, gy, h, w)
    return clip.replace(resample_frames(clip.frames, src_x, src_y, params.fill))


def rotate(clip, theta, fill=0.0):
    return warp_affine(clip, GeometricParams(theta=theta, fill=fill), "rotate")


def translate(clip, m, axis="x", fill=0.0):
    return warp_affine(clip, GeometricParams(translate_m=m, axis=axis, fill=fill), "translate")


def shear(clip, m, axis="x", fill=0.0):
    return warp_affine(clip, GeometricParams(shear_m=m, axis=axis, fill=fill), "shear")


def flip(clip):
    return warp_affine(clip, GeometricParams(), "flip")


# -- appearance --------------------------------------------------------------

def random_erase(clip: VideoClip, rng, size=(7, 7), *, return_corners: bool = False):
    """Replace one random ``size`` rectangle per frame with uniform noise.

    Each frame gets its own uniformly placed rectangle; the noise is drawn
    independently for every pixel and channel.
    """
    eh, ew = (int(size), int(size)) if np.isscalar(size) else (int(size[0]), int(size[1]))
    t, h, w, c = clip.frames.shape
    if eh < 1 or ew < 1:
        raise ParameterError(f"erase size must be positive, got {(eh, ew)}")
    if h < eh or w < ew:
        raise ParameterError(f"frame {h}x{w} smaller than erase region {eh}x{ew}")
    gen = as_generator(rng)
    top = gen.integers(0, h - eh + 1, size=t)
    left = gen.integers(0, w - ew + 1, size=t)
    noise = gen.random((t, eh, ew, c), dtype=FRAME_DTYPE)
    frames = clip.frames.copy()
    ti = np.arange(t)[:, None, None]
    ri = (top[:, None] + np.arange(eh))[:, :, None]
    ci = (left[:, None] + np.arange(ew))[:, None, :]
    frames[ti, ri, ci, :] = noise
    out = clip.replace(frames)
    if return_corners:
        return out, np.stack([top, left], axis=1)
    return out


def adjust_brightness(clip: VideoClip, factor: float) -> VideoClip:
    if not factor > 0:
        raise ParameterError(f"brightness factor must be positive, got {factor}")
    if factor == 1.0:
        return clip
    return clip.replace(np.clip(clip.frames * FRAME_DTYPE(factor), 0.0, 1.0))


def adjust_saturation(clip: VideoClip, factor: float) -> VideoClip:
    """Blend each pixel with its luma: ``L + factor * (channel - L)``."""
    if clip.frames.shape[-1] != 3:
        raise ParameterError("saturation needs a 3-channel clip")
    if not factor >= 0:
        raise ParameterError(f"saturation factor must be >= 0, got {factor}")
    if factor == 1.0:
        return clip
    frames = clip.frames
    luma = (frames @ np.asarray(LUMA_WEIGHTS, dtype=FRAME_DTYPE))[..., None]
    out = luma + FRAME_DTYPE(factor) * (frames - luma)
    return clip.replace(np.clip(out, 0.0, 1.0))


def sample_camera_noise(x: np.ndarray, sigma_s_sq: float, sigma_c_sq: float, rng) -> np.ndarray:
    """Unclamped Poisson-Gaussian noise with variance ``sigma_s_sq*x + sigma_c_sq``."""
    if sigma_s_sq < 0 or sigma_c_sq < 0:
        raise ParameterError("noise variance coefficients must be >= 0")
    x = np.asarray(x, dtype=FRAME_DTYPE)
    var = np.maximum(FRAME_DTYPE(sigma_s_sq) * x + FRAME_DTYPE(sigma_c_sq), 0.0)
    n = as_generator(rng).standard_normal(x.shape, dtype=FRAME_DTYPE)
    n *= np.sqrt(var, dtype=FRAME_DTYPE)
    return n


def camera_noise(clip: VideoClip, sigma_s_sq: float = 0.0004, sigma_c_sq: float = 0.0004,
                 rng=None) -> VideoClip:
    if sigma_s_sq < 0 or sigma_c_sq < 0:
        raise ParameterError("noise variance coefficients must be >= 0")
    if sigma_s_sq == 0 and sigma_c_sq == 0:
        return clip
    n = sample_camera_noise(clip.frames, sigma_s_sq, sigma_c_sq, rng)
    n += clip.frames
    np.clip(n, 0.0, 1.0, out=n)
    return clip.replace(n)
