"""On-disk sample containers, CSV tables and JSON configuration loading.

A sample container is a directory::

    meta.json    schema_version, id, frames, height, width, channels, fps,
                 dtype ("u8" | "f32"), layout ("THWC"), optional reference_hr
    frames.bin   little-endian pixels, THWC row-major, T*H*W*C elements
    signal.bin   little-endian float32 label trace, T elements

u8 pixels are mapped to [0, 1] by dividing by 255.
"""

from __future__ import annotations

import csv
import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import jsonschema
import numpy as np
from referencing import Registry, Resource

from .core import ConfigError, FormatError, Sample, SignalTrace, VideoClip

SCHEMA_VERSION = 1
_DTYPES = {"u8": np.dtype("<u1"), "f32": np.dtype("<f4")}
SCHEMA_NAMES = ("meta", "pipeline", "ops", "synth", "run")


# -- JSON --------------------------------------------------------------------

def dump_json(obj, path: Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("rppgaug").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _registry() -> Registry:
    pairs = [(f"{n}.schema.json", Resource.from_contents(load_schema(n))) for n in SCHEMA_NAMES]
    return Registry().with_resources(pairs)


def validate_json(obj, schema_name: str, exc_type=ConfigError) -> None:
    validator = jsonschema.Draft202012Validator(load_schema(schema_name), registry=_registry())
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.path) or "<root>"
        raise exc_type(f"{schema_name} schema violation at {where}: {err.message}")


def load_config(path, schema_name: str):
    """Read a JSON file and validate it against a bundled schema."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    validate_json(obj, schema_name)
    return obj


# -- sample containers -------------------------------------------------------

def write_sample(sample: Sample, path, dtype: str = "f32") -> Path:
    if dtype not in _DTYPES:
        raise FormatError(f"unknown dtype {dtype!r}")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    t, h, w, c = sample.clip.frames.shape
    meta = {
        "schema_version": SCHEMA_VERSION,
        "id": sample.id,
        "frames": t,
        "height": h,
        "width": w,
        "channels": c,
        "fps": sample.clip.fps,
        "dtype": dtype,
        "layout": "THWC",
    }
    if sample.reference_hr is not None:
        meta["reference_hr"] = float(sample.reference_hr)
    frames = sample.clip.frames
    if dtype == "u8":
        payload = np.clip(np.rint(frames * np.float32(255.0)), 0, 255).astype(_DTYPES["u8"])
    else:
        payload = frames.astype(_DTYPES["f32"])
    (path / "frames.bin").write_bytes(payload.tobytes(order="C"))
    (path / "signal.bin").write_bytes(np.asarray(sample.trace.values).astype("<f4").tobytes())
    dump_json(meta, path / "meta.json")
    return path


def read_meta(path) -> dict:
    path = Path(path)
    try:
        meta = json.loads((path / "meta.json").read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise FormatError(f"{path}: missing meta.json") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}/meta.json: invalid JSON: {exc}") from exc
    if isinstance(meta, dict) and meta.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported schema_version {meta.get('schema_version')!r}")
    validate_json(meta, "meta", FormatError)
    return meta


def _read_payload(file: Path, dtype: np.dtype, count: int) -> np.ndarray:
    try:
        raw = file.read_bytes()
    except FileNotFoundError as exc:
        raise FormatError(f"missing {file}") from exc
    expected = count * dtype.itemsize
    if len(raw) != expected:
        raise FormatError(f"{file}: expected {expected} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=dtype)


def read_sample(path) -> Sample:
    path = Path(path)
    meta = read_meta(path)
    t, h, w, c = meta["frames"], meta["height"], meta["width"], meta["channels"]
    dtype = _DTYPES[meta["dtype"]]
    pixels = _read_payload(path / "frames.bin", dtype, t * h * w * c).reshape(t, h, w, c)
    if meta["dtype"] == "u8":
        frames = pixels.astype(np.float32) / np.float32(255.0)
    else:
        frames = pixels.astype(np.float32)
    signal = _read_payload(path / "signal.bin", np.dtype("<f4"), t).astype(np.float64)
    fps = float(meta["fps"])
    return Sample(VideoClip(frames, fps), SignalTrace(signal, fps), meta["id"], meta.get("reference_hr"))


def container_dtype(path) -> str:
    return read_meta(path)["dtype"]


def list_containers(root) -> list[Path]:
    """Container directories under ``root`` (or ``root`` itself), sorted by name."""
    root = Path(root)
    if not root.is_dir():
        raise FormatError(f"not a directory: {root}")
    if (root / "meta.json").is_file():
        return [root]
    found = sorted(p for p in root.iterdir() if p.is_dir() and (p / "meta.json").is_file())
    return found


# -- CSV tables --------------------------------------------------------------

HR_COLUMNS = ("sample_id", "chunk_index", "bpm")


def write_hr_csv(rows: Iterable[tuple[str, int, float]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HR_COLUMNS)
        for sample_id, index, bpm in rows:
            writer.writerow([sample_id, int(index), f"{bpm:.4f}"])


def read_hr_csv(path) -> dict[tuple[str, int], float]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != HR_COLUMNS:
                raise FormatError(f"{path}: expected header {','.join(HR_COLUMNS)}, got {header}")
            out = {}
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 3:
                    raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
                try:
                    key = (row[0], int(row[1]))
                    out[key] = float(row[2])
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from exc
            return out
    except FileNotFoundError as exc:
        raise FormatError(f"file not found: {path}") from exc


def write_sweep_csv(result, path, long_path: Optional[Path] = None) -> None:
    """Square pivot (3 decimals) to ``path``; long form (row_op, col_op, mae) to ``long_path``."""
    names = list(result.names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if result.mode == "single":
            writer.writerow(["op", "mae"])
            for name, value in zip(names, result.values):
                writer.writerow([name, f"{value:.3f}"])
        else:
            writer.writerow(["op"] + names)
            for name, row in zip(names, result.values):
                writer.writerow([name] + [f"{v:.3f}" for v in row])
    if long_path is None:
        return
    with open(long_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row_op", "col_op", "mae"])
        if result.mode == "single":
            for name, value in zip(names, result.values):
                writer.writerow([name, name, repr(float(value))])
        else:
            for i, row_name in enumerate(names):
                for j, col_name in enumerate(names):
                    writer.writerow([row_name, col_name, repr(float(result.values[i, j]))])
