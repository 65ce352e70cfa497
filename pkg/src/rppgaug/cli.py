"""Command-line entry point.

Subcommands: synth, augment, preprocess, hr, eval, sweep.  Results go to
files only; diagnostics go to stderr.  Exit codes: 0 success, 2 config or
schema error, 3 data or format error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import container
from .analysis import FilterConfig, butterworth_bandpass, compute_metrics, estimate_hr_fft
from .core import ConfigError, FormatError, InputError, ParameterError, PipelineError, derive_rng
from .pipeline import (OpSpec, PipelineSpec, _parallel_map, apply_pipeline, oracle_evaluator,
                       sweep)
from .preprocess import PreprocessConfig, chunk, difference_sample, preprocess_sample
from .synthgen import SynthConfig, generate_sample, oracle_extract

log = logging.getLogger("rppgaug")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
APPEARANCE_OPERATORS = ("random_erase", "brightness", "saturation", "camera_noise")


def _workers(n: int) -> int:
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def _fresh_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _check_disjoint(src: Path, dst: Path) -> None:
    src, dst = src.resolve(), dst.resolve()
    if src == dst or src in dst.parents:
        raise ConfigError(f"output {dst} must not be inside input {src}")


def _op_from_json(item, default_prob: float) -> OpSpec:
    if isinstance(item, str):
        return OpSpec(item, prob=default_prob)
    return OpSpec(item["name"], item.get("params", {}), item.get("prob", default_prob))


def pipeline_from_json(obj: dict, seed=None, batch_consistent=None) -> PipelineSpec:
    try:
        ops = tuple(_op_from_json(item, 0.5) for item in obj["ops"])
        spec = PipelineSpec(ops, obj.get("master_seed", 0), obj.get("batch_consistent", False))
        if seed is not None:
            spec = spec.with_seed(seed)
        if batch_consistent:
            spec = PipelineSpec(spec.ops, spec.master_seed, True)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    return spec


def _filter_cfg(obj: dict, zero_phase=None) -> FilterConfig:
    cfg = FilterConfig(**obj)
    if zero_phase is not None:
        cfg = FilterConfig(cfg.order, cfg.low_hz, cfg.high_hz, zero_phase)
    return cfg


# -- subcommands -------------------------------------------------------------

def cmd_synth(args) -> int:
    obj = container.load_config(args.config, "synth")
    dtype = obj.pop("dtype", "f32")
    hr = obj.pop("hr_bpm", SynthConfig.hr_bpm)
    for key in ("base_color", "motion_drift_px_per_s", "sensor_noise", "face_box"):
        if obj.get(key) is not None:
            obj[key] = tuple(obj[key])
    out = _fresh_dir(Path(args.out))
    for i in range(args.count):
        value = hr
        if isinstance(hr, list):
            lo, hi = hr
            value = lo + derive_rng(args.seed, "synth/hr", i).random() * (hi - lo)
        try:
            cfg = SynthConfig(hr_bpm=float(value), **obj)
            cfg.check()
        except (ParameterError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        sample_id = f"synth_{i:04d}"
        sample = generate_sample(cfg, derive_rng(args.seed, "synth/noise", i), sample_id)
        container.write_sample(sample, out / sample_id, dtype)
    log.info("wrote %d samples to %s", args.count, out)
    return EXIT_OK


def _load_dataset(path):
    dirs = container.list_containers(path)
    if not dirs:
        raise FormatError(f"no sample containers under {path}")
    return dirs


def cmd_augment(args) -> int:
    spec = pipeline_from_json(container.load_config(args.pipeline, "pipeline"),
                              args.seed, args.batch_consistent)
    src = Path(getattr(args, "in"))
    dirs = _load_dataset(src)
    _check_disjoint(src, Path(args.out))
    out = _fresh_dir(Path(args.out))

    def one(k):
        sample = container.read_sample(dirs[k])
        dtype = args.dtype or container.container_dtype(dirs[k])
        result = apply_pipeline(sample, spec, k, k // args.batch_size)
        result = type(result)(result.clip, result.trace, f"{sample.id}_aug", result.reference_hr)
        container.write_sample(result, out / result.id, dtype)

    _parallel_map(one, range(len(dirs)), _workers(args.workers))
    return EXIT_OK


def cmd_preprocess(args) -> int:
    run = container.load_config(args.config, "run")
    try:
        cfg = PreprocessConfig(**run.get("preprocess", {}))
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    stage = args.augment_stage or run.get("augment_stage", "raw")
    spec = None
    if args.pipeline:
        spec = pipeline_from_json(container.load_config(args.pipeline, "pipeline"), args.seed)
    elif "pipeline" in run:
        spec = pipeline_from_json(run["pipeline"], args.seed)
    if spec is not None and stage == "diff":
        bad = [op.name for op in spec.ops if op.name in APPEARANCE_OPERATORS]
        if bad:
            raise ConfigError(f"appearance operators {bad} cannot run on difference frames")
        if cfg.diff_mode == "none":
            raise ConfigError("augment_stage 'diff' needs diff_mode plain or normalized")

    src = Path(getattr(args, "in"))
    dirs = _load_dataset(src)
    _check_disjoint(src, Path(args.out))
    out = _fresh_dir(Path(args.out))
    for k, d in enumerate(dirs):
        sample = container.read_sample(d)
        if spec is not None and stage == "raw":
            sample = apply_pipeline(sample, spec, k)
        if spec is not None and stage == "diff":
            base = preprocess_sample(sample, PreprocessConfig(cfg.crop, cfg.resize, cfg.chunk_len, "none"))
            sample = apply_pipeline(difference_sample(base, cfg.diff_mode), spec, k)
        else:
            sample = preprocess_sample(sample, cfg)
        for piece in chunk(sample, cfg.chunk_len):
            container.write_sample(piece, out / piece.id, "f32")
    return EXIT_OK


def hr_rows(sample, source: str, chunk_len: int, filter_cfg: FilterConfig, pad_factor: int):
    band = (filter_cfg.low_hz, filter_cfg.high_hz)
    pieces = chunk(sample, chunk_len) if 0 < chunk_len <= sample.clip.n_frames else [sample]
    rows = []
    for index, piece in enumerate(pieces):
        if source == "reference":
            if sample.reference_hr is None:
                raise InputError(f"sample {sample.id} has no reference_hr")
            bpm = float(sample.reference_hr)
        else:
            wave = oracle_extract(piece) if source == "video" else piece.trace
            bpm = estimate_hr_fft(butterworth_bandpass(wave, filter_cfg), band, pad_factor).bpm
        rows.append((sample.id, index, bpm))
    return rows


def cmd_hr(args) -> int:
    filter_obj = {}
    if args.config:
        filter_obj = container.load_config(args.config, "run").get("filter", {})
    try:
        filter_cfg = _filter_cfg(filter_obj, False if args.no_zero_phase else None)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if args.pad_factor < 1:
        raise ConfigError("--pad-factor must be >= 1")
    dirs = _load_dataset(getattr(args, "in"))

    def one(d):
        return hr_rows(container.read_sample(d), args.source, args.chunk_len, filter_cfg, args.pad_factor)

    rows = [r for part in _parallel_map(one, dirs, _workers(args.workers)) for r in part]
    container.write_hr_csv(rows, args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = container.read_hr_csv(args.pred)
    ref = container.read_hr_csv(args.ref)
    if set(pred) != set(ref):
        missing = sorted(set(pred) ^ set(ref))[:5]
        raise InputError(f"prediction and reference keys differ, e.g. {missing}")
    keys = sorted(pred)
    report = compute_metrics([pred[k] for k in keys], [ref[k] for k in keys])
    container.dump_json(report.to_dict(), Path(args.out))
    if args.csv:
        d = report.to_dict()
        Path(args.csv).write_text(
            "mae,rmse,mape,pearson,n\n" + ",".join(str(d[k]) for k in ("mae", "rmse", "mape", "pearson", "n"))
            + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args) -> int:
    obj = container.load_config(args.ops, "ops")
    items = obj if isinstance(obj, list) else obj["ops"]
    prob = args.prob if args.prob is not None else (1.0 if isinstance(obj, list) else obj.get("prob", 1.0))
    try:
        ops = [_op_from_json(item, prob) for item in items]
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    dataset = [container.read_sample(d) for d in _load_dataset(args.dataset)]
    evaluator = oracle_evaluator(args.chunk_len, args.reference)
    result = sweep(dataset, ops, args.mode, evaluator, args.seed, workers=_workers(args.workers))
    out = Path(args.out)
    container.write_sweep_csv(result, out, out.with_name(out.stem + "_long.csv"))
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rppgaug", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic pulse samples")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("augment", help="apply an augmentation pipeline")
    p.add_argument("--pipeline", required=True)
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-consistent", action="store_true")
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--dtype", choices=("u8", "f32"))
    p.add_argument("--workers", type=int, default=1, help="0 = all cores")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("preprocess", help="crop, resize, difference and chunk")
    p.add_argument("--config", required=True)
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pipeline")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--augment-stage", choices=("raw", "diff"))
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("hr", help="estimate heart rate per chunk")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="run config; only the 'filter' section is used")
    p.add_argument("--no-zero-phase", action="store_true")
    p.add_argument("--pad-factor", type=int, default=1)
    p.add_argument("--chunk-len", type=int, default=180,
                   help="0, or longer than the sample, = one estimate per sample")
    p.add_argument("--source", choices=("video", "trace", "reference"), default="video")
    p.add_argument("--workers", type=int, default=1, help="0 = all cores")
    p.set_defaults(func=cmd_hr)

    p = sub.add_parser("eval", help="score predicted against reference heart rates")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="single or pairwise operator sweep")
    p.add_argument("--ops", required=True)
    p.add_argument("--mode", choices=("single", "pairwise"), default="single")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prob", type=float)
    p.add_argument("--chunk-len", type=int, default=180)
    p.add_argument("--reference", choices=("label", "metadata"), default="label")
    p.add_argument("--workers", type=int, default=1, help="0 = all cores")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (FormatError, InputError, PipelineError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
