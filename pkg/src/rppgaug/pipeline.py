"""Operator registry, probabilistic composition and the single/pairwise sweep.

Each operator in a pipeline reads three independent random streams addressed
by ``(stage, sample_index, operator_index)``:

* ``augment/coin``       the inclusion draw, compared against ``prob``;
* ``augment/magnitude``  parameter magnitudes (keyed by batch index instead of
  sample index when ``batch_consistent`` is set);
* ``augment/noise``      the operator's own randomness (noise, erase corners).

Results therefore never depend on execution order or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import signal_ops, video_ops
from .analysis import FilterConfig, butterworth_bandpass, compute_metrics, estimate_hr_fft
from .core import InputError, ParameterError, PipelineError, RppgAugError, Sample, derive_rng
from .preprocess import chunk
from .synthgen import oracle_extract

COIN_STAGE = "augment/coin"
MAGNITUDE_STAGE = "augment/magnitude"
NOISE_STAGE = "augment/noise"


def _uniform(rng: np.random.Generator, value) -> float:
    """A scalar is fixed; a ``[lo, hi]`` pair is drawn uniformly from [lo, hi)."""
    if isinstance(value, (list, tuple)):
        lo, hi = (float(v) for v in value)
        if lo > hi:
            raise ParameterError(f"range low {lo} > high {hi}")
        return lo + rng.random() * (hi - lo)
    return float(value)


def _upper_closed(rng: np.random.Generator, value) -> float:
    """Like ``_uniform`` but over (lo, hi], for strictly positive magnitudes."""
    if isinstance(value, (list, tuple)):
        lo, hi = (float(v) for v in value)
        if lo > hi:
            raise ParameterError(f"range low {lo} > high {hi}")
        return hi - rng.random() * (hi - lo)
    return float(value)


@dataclass(frozen=True)
class Operator:
    name: str
    modality: str
    defaults: Mapping
    draw: Callable[[np.random.Generator, Mapping], dict]
    apply: Callable[[Sample, Mapping, np.random.Generator], Sample]


def _geometric(kind: str, axis: str = "x"):
    def apply(s: Sample, mag, rng):
        _, h, w, _ = s.clip.frames.shape
        if kind == "rotate":
            params = video_ops.GeometricParams(theta=math.radians(mag["theta_deg"]), fill=mag["fill"])
        elif kind == "translate":
            side = w if axis == "x" else h
            shift = mag["shift_px"] if mag.get("shift_px") is not None else mag["shift_frac"] * side
            params = video_ops.GeometricParams(translate_m=shift, axis=axis, fill=mag["fill"])
        elif kind == "shear":
            params = video_ops.GeometricParams(shear_m=mag["shear"], axis=axis, fill=mag["fill"])
        else:
            params = video_ops.GeometricParams()
        return s.with_clip(video_ops.warp_affine(s.clip, params, kind))
    return apply


def _draw_keys(*keys):
    def draw(rng, params):
        out = {}
        for key in keys:
            out[key] = _uniform(rng, params[key]) if params.get(key) is not None else None
        return out
    return draw


def _draw_wander(rng, params):
    amplitude = _uniform(rng, params["amplitude"])
    freq = _uniform(rng, params["freq_hz"])
    phase = params.get("phase")
    phase = rng.random() * 2.0 * math.pi if phase is None else float(phase)
    return {"amplitude": amplitude, "freq_hz": freq, "phase": phase}


def _draw_warp(rng, params):
    return {"sigma": _upper_closed(rng, params["sigma"]), "knots": int(params["knots"])}


_FILL = {"fill": 0.0}

OPERATORS: dict[str, Operator] = {}


def _register(op: Operator) -> None:
    OPERATORS[op.name] = op


_register(Operator("rotate", "video", {"theta_deg": [-15.0, 15.0], **_FILL},
                   _draw_keys("theta_deg", "fill"), _geometric("rotate")))
for _axis in ("x", "y"):
    _register(Operator(f"translate_{_axis}", "video",
                       {"shift_frac": [-0.1, 0.1], "shift_px": None, **_FILL},
                       _draw_keys("shift_frac", "shift_px", "fill"), _geometric("translate", _axis)))
    _register(Operator(f"shear_{_axis}", "video", {"shear": [-0.2, 0.2], **_FILL},
                       _draw_keys("shear", "fill"), _geometric("shear", _axis)))
_register(Operator("flip", "video", {}, _draw_keys(), _geometric("flip")))
_register(Operator(
    "random_erase", "video", {"height": 7, "width": 7}, _draw_keys(),
    lambda s, mag, rng: s.with_clip(video_ops.random_erase(
        s.clip, rng, (int(mag["params"]["height"]), int(mag["params"]["width"]))))))
_register(Operator(
    "brightness", "video", {"factor": [0.75, 1.25]}, _draw_keys("factor"),
    lambda s, mag, rng: s.with_clip(video_ops.adjust_brightness(s.clip, mag["factor"]))))
_register(Operator(
    "saturation", "video", {"factor": [0.75, 1.25]}, _draw_keys("factor"),
    lambda s, mag, rng: s.with_clip(video_ops.adjust_saturation(s.clip, mag["factor"]))))
_register(Operator(
    "camera_noise", "video", {"sigma_s_sq": 0.0004, "sigma_c_sq": 0.0004},
    _draw_keys("sigma_s_sq", "sigma_c_sq"),
    lambda s, mag, rng: s.with_clip(video_ops.camera_noise(
        s.clip, mag["sigma_s_sq"], mag["sigma_c_sq"], rng))))
_register(Operator(
    "gaussian_noise", "signal", {"variance": 0.5}, _draw_keys("variance"),
    lambda s, mag, rng: s.with_trace(signal_ops.add_gaussian_noise(s.trace, mag["variance"], rng))))
_register(Operator(
    "baseline_wander", "signal", {"amplitude": [0.0, 0.2], "freq_hz": [0.0, 0.5], "phase": None},
    _draw_wander,
    lambda s, mag, rng: s.with_trace(signal_ops.add_baseline_wander(
        s.trace, mag["amplitude"], mag["freq_hz"], mag["phase"]))))
_register(Operator(
    "scaling", "signal", {"factor": [0.75, 1.25]}, _draw_keys("factor"),
    lambda s, mag, rng: s.with_trace(signal_ops.scale_signal(s.trace, mag["factor"]))))
_register(Operator(
    "magnitude_warp", "signal", {"sigma": [0.0, 0.25], "knots": 4}, _draw_warp,
    lambda s, mag, rng: s.with_trace(signal_ops.magnitude_warp(s.trace, mag["sigma"], mag["knots"], rng))))

OPERATOR_NAMES = tuple(OPERATORS)
VIDEO_OPERATORS = tuple(n for n, op in OPERATORS.items() if op.modality == "video")
SIGNAL_OPERATORS = tuple(n for n, op in OPERATORS.items() if op.modality == "signal")


@dataclass(frozen=True)
class OpSpec:
    name: str
    params: Mapping = field(default_factory=dict)
    prob: float = 0.5

    def __post_init__(self):
        if self.name not in OPERATORS:
            raise ParameterError(f"unknown operator {self.name!r}; known: {', '.join(OPERATOR_NAMES)}")
        if not 0.0 <= self.prob <= 1.0:
            raise ParameterError(f"prob must lie in [0, 1], got {self.prob}")
        unknown = set(self.params) - set(OPERATORS[self.name].defaults)
        if unknown:
            raise ParameterError(f"{self.name}: unknown parameters {sorted(unknown)}")
        object.__setattr__(self, "params", dict(self.params))

    @property
    def operator(self) -> Operator:
        return OPERATORS[self.name]

    def resolved_params(self) -> dict:
        return {**self.operator.defaults, **self.params}

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "prob": self.prob}


@dataclass(frozen=True)
class PipelineSpec:
    ops: tuple = ()
    master_seed: int = 0
    batch_consistent: bool = False

    def __post_init__(self):
        ops = tuple(op if isinstance(op, OpSpec) else OpSpec(op) for op in self.ops)
        object.__setattr__(self, "ops", ops)
        if sum(op.name == "flip" for op in ops) > 1:
            raise ParameterError("a pipeline may contain at most one flip")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ParameterError("master_seed must be a 64-bit unsigned integer")

    def with_probs(self, prob: float) -> "PipelineSpec":
        ops = tuple(OpSpec(op.name, op.params, prob) for op in self.ops)
        return PipelineSpec(ops, self.master_seed, self.batch_consistent)

    def with_seed(self, master_seed: int) -> "PipelineSpec":
        return PipelineSpec(self.ops, master_seed, self.batch_consistent)

    def to_dict(self) -> dict:
        return {"ops": [op.to_dict() for op in self.ops], "master_seed": int(self.master_seed),
                "batch_consistent": bool(self.batch_consistent)}


@dataclass(frozen=True)
class AppliedOp:
    index: int
    name: str
    applied: bool
    magnitudes: Optional[dict]


def run_pipeline(sample: Sample, spec: PipelineSpec, sample_index: int = 0,
                 batch_index: Optional[int] = None) -> tuple[Sample, list[AppliedOp]]:
    """Apply ``spec`` to one sample and report which operators fired."""
    seed = int(spec.master_seed)
    mag_index = sample_index
    if spec.batch_consistent:
        mag_index = sample_index if batch_index is None else batch_index
    out = sample
    log = []
    for i, op in enumerate(spec.ops):
        coin = derive_rng(seed, COIN_STAGE, sample_index, i).random()
        if not coin < op.prob:
            log.append(AppliedOp(i, op.name, False, None))
            continue
        params = op.resolved_params()
        try:
            mags = op.operator.draw(derive_rng(seed, MAGNITUDE_STAGE, mag_index, i), params)
            mags["params"] = params
            out = op.operator.apply(out, mags, derive_rng(seed, NOISE_STAGE, sample_index, i))
        except (RppgAugError, ValueError) as exc:
            raise PipelineError(i, op.name, exc) from exc
        log.append(AppliedOp(i, op.name, True, {k: v for k, v in mags.items() if k != "params"}))
    return out, log


def apply_pipeline(sample: Sample, spec: PipelineSpec, sample_index: int = 0,
                   batch_index: Optional[int] = None) -> Sample:
    return run_pipeline(sample, spec, sample_index, batch_index)[0]


def apply_dataset(samples: Sequence[Sample], spec: PipelineSpec, workers: int = 1,
                  batch_size: int = 1) -> list[Sample]:
    """Augment a dataset; sample ``k`` belongs to batch ``k // batch_size``."""
    if batch_size < 1:
        raise ParameterError("batch_size must be >= 1")

    def one(k):
        return apply_pipeline(samples[k], spec, k, k // batch_size)

    return _parallel_map(one, range(len(samples)), workers)


def _parallel_map(fn, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


DEFAULT_PROPOSED_ORDER = (
    "camera_noise", "shear_x", "translate_x", "rotate", "translate_y", "shear_y",
    "gaussian_noise", "baseline_wander",
)


def proposed_pipeline_spec(master_seed: int = 0, order: Optional[Sequence[str]] = None,
                           prob: float = 0.5) -> PipelineSpec:
    """The eight-operator composition: six best video ops, then two label ops."""
    names = tuple(order) if order is not None else DEFAULT_PROPOSED_ORDER
    if sorted(names) != sorted(DEFAULT_PROPOSED_ORDER):
        raise ParameterError(f"order must be a permutation of {DEFAULT_PROPOSED_ORDER}")
    return PipelineSpec(tuple(OpSpec(n, prob=prob) for n in names), master_seed)


# -- sweep -------------------------------------------------------------------

def chunk_hr_pairs(sample: Sample, chunk_len: int = 180, reference: str = "label",
                   filter_cfg: FilterConfig = FilterConfig()) -> list[tuple[float, float]]:
    """(video-derived bpm, reference bpm) for every chunk of ``sample``.

    ``reference='label'`` scores against the HR of the (possibly augmented)
    label trace; ``'metadata'`` against ``sample.reference_hr``.
    """
    band = (filter_cfg.low_hz, filter_cfg.high_hz)
    pairs = []
    for piece in chunk(sample, chunk_len):
        pred = estimate_hr_fft(butterworth_bandpass(oracle_extract(piece), filter_cfg), band).bpm
        if reference == "label":
            ref = estimate_hr_fft(butterworth_bandpass(piece.trace, filter_cfg), band).bpm
        elif reference == "metadata":
            if piece.reference_hr is None:
                raise InputError(f"sample {sample.id} has no reference_hr")
            ref = piece.reference_hr
        else:
            raise ParameterError(f"unknown reference {reference!r}")
        pairs.append((pred, ref))
    return pairs


def oracle_evaluator(chunk_len: int = 180, reference: str = "label",
                     filter_cfg: FilterConfig = FilterConfig()):
    """Evaluator mapping an augmented dataset to the MAE of the oracle predictor."""
    def evaluate(dataset: Sequence[Sample]) -> float:
        pairs = [p for s in dataset for p in chunk_hr_pairs(s, chunk_len, reference, filter_cfg)]
        if not pairs:
            raise InputError("no complete chunk in dataset")
        pred, ref = zip(*pairs)
        return compute_metrics(pred, ref).mae
    return evaluate


@dataclass(frozen=True)
class SweepResult:
    names: tuple
    mode: str
    values: np.ndarray


def sweep(dataset: Sequence[Sample], op_list: Sequence, mode: str = "single",
          evaluator: Optional[Callable[[Sequence[Sample]], float]] = None,
          master_seed: int = 0, prob: float = 1.0, workers: int = 1) -> SweepResult:
    """Score every operator alone (``single``) or every ordered pair (``pairwise``).

    Pair cell ``(i, j)`` applies op i then op j; the diagonal re-uses the
    single-operator pipeline.  Bare operator names get probability ``prob``.
    """
    if not dataset:
        raise InputError("sweep needs a non-empty dataset")
    if mode not in ("single", "pairwise"):
        raise ParameterError(f"mode must be 'single' or 'pairwise', got {mode!r}")
    ops = [op if isinstance(op, OpSpec) else OpSpec(op, prob=prob) for op in op_list]
    if not ops:
        raise ParameterError("sweep needs at least one operator")
    evaluator = evaluator or oracle_evaluator()
    k = len(ops)

    def score(cell):
        i, j = cell
        chain = (ops[i],) if i == j else (ops[i], ops[j])
        spec = PipelineSpec(chain, master_seed)
        return evaluator(apply_dataset(dataset, spec))

    if mode == "single":
        cells = [(i, i) for i in range(k)]
        values = np.array(_parallel_map(score, cells, workers), dtype=np.float64)
    else:
        cells = [(i, j) for i in range(k) for j in range(k)]
        values = np.array(_parallel_map(score, cells, workers), dtype=np.float64).reshape(k, k)
    return SweepResult(tuple(op.name for op in ops), mode, values)
