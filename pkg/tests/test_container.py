import json

import numpy as np
import pytest

from rppgaug import container
from rppgaug.core import ConfigError, FormatError, Sample, SignalTrace, VideoClip

from conftest import make_sample


def test_f32_round_trip_bit_identical(tmp_path):
    s = make_sample(t=12, h=5, w=7, hr=75.0)
    s = s.with_trace(SignalTrace(s.trace.values.astype(np.float32), 30.0))
    container.write_sample(s, tmp_path / "a")
    r = container.read_sample(tmp_path / "a")
    assert r.clip.frames.tobytes() == s.clip.frames.tobytes()
    assert r.trace.values.tobytes() == s.trace.values.tobytes()
    assert (r.id, r.reference_hr, r.clip.fps) == (s.id, 75.0, 30.0)
    container.write_sample(r, tmp_path / "b")
    for name in ("meta.json", "frames.bin", "signal.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_layout_and_meta(tmp_path):
    frames = np.arange(2 * 3 * 4 * 3, dtype=np.float32).reshape(2, 3, 4, 3) / 100
    s = Sample(VideoClip(frames, 25.0), SignalTrace([0.5, -0.5], 25.0), "m")
    container.write_sample(s, tmp_path)
    raw = np.frombuffer((tmp_path / "frames.bin").read_bytes(), dtype="<f4")
    assert np.array_equal(raw, frames.ravel())
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta == {"schema_version": 1, "id": "m", "frames": 2, "height": 3, "width": 4,
                    "channels": 3, "fps": 25.0, "dtype": "f32", "layout": "THWC"}
    assert (tmp_path / "signal.bin").stat().st_size == 8


def test_u8_quantization(tmp_path):
    s = make_sample(t=3, h=2, w=2)
    frames = np.zeros((3, 2, 2, 3), dtype=np.float32)
    frames[0, 0, 0, 0] = 128 / 255
    s = s.with_clip(VideoClip(frames, 30.0))
    container.write_sample(s, tmp_path, dtype="u8")
    assert (tmp_path / "frames.bin").read_bytes()[0] == 128
    r = container.read_sample(tmp_path)
    assert r.clip.frames[0, 0, 0, 0] == pytest.approx(0.50196, abs=1e-5)
    container.write_sample(r, tmp_path / "again", dtype="u8")
    assert (tmp_path / "again" / "frames.bin").read_bytes() == (tmp_path / "frames.bin").read_bytes()


def test_truncated_payload_reports_sizes(tmp_path):
    container.write_sample(make_sample(t=4, h=2, w=2), tmp_path)
    data = (tmp_path / "frames.bin").read_bytes()
    (tmp_path / "frames.bin").write_bytes(data[:-1])
    with pytest.raises(FormatError, match=rf"expected {len(data)} bytes, found {len(data) - 1}"):
        container.read_sample(tmp_path)


def test_bad_schema_version_and_meta(tmp_path):
    container.write_sample(make_sample(t=4, h=2, w=2), tmp_path)
    meta = json.loads((tmp_path / "meta.json").read_text())
    (tmp_path / "meta.json").write_text(json.dumps({**meta, "schema_version": 2}))
    with pytest.raises(FormatError, match="schema_version"):
        container.read_sample(tmp_path)
    (tmp_path / "meta.json").write_text(json.dumps({**meta, "layout": "TCHW"}))
    with pytest.raises(FormatError):
        container.read_sample(tmp_path)


def test_list_containers(tmp_path):
    for name in ("b", "a"):
        container.write_sample(make_sample(t=2, h=1, w=1, sample_id=name), tmp_path / name)
    (tmp_path / "junk").mkdir()
    assert [p.name for p in container.list_containers(tmp_path)] == ["a", "b"]
    assert container.list_containers(tmp_path / "a") == [tmp_path / "a"]


def test_hr_csv_round_trip(tmp_path):
    rows = [("x", 0, 90.0), ("x", 1, 72.5)]
    container.write_hr_csv(rows, tmp_path / "hr.csv")
    assert (tmp_path / "hr.csv").read_text().splitlines()[0] == "sample_id,chunk_index,bpm"
    assert container.read_hr_csv(tmp_path / "hr.csv") == {("x", 0): 90.0, ("x", 1): 72.5}
    (tmp_path / "bad.csv").write_text("id,bpm\n")
    with pytest.raises(FormatError):
        container.read_hr_csv(tmp_path / "bad.csv")


def test_config_validation(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"ops": ["rotate", {"name": "scaling", "prob": 1.0}]}))
    assert container.load_config(p, "pipeline")["ops"][0] == "rotate"
    p.write_text(json.dumps({"ops": [{"name": "rotate", "prob": 2}]}))
    with pytest.raises(ConfigError):
        container.load_config(p, "pipeline")
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        container.load_config(p, "pipeline")
    run = tmp_path / "run.json"
    run.write_text(json.dumps({"preprocess": {"crop": 64}, "pipeline": {"ops": []}}))
    container.load_config(run, "run")
    ops = tmp_path / "ops.json"
    ops.write_text(json.dumps(["rotate", "camera_noise"]))
    container.load_config(ops, "ops")


def test_docs_schemas_match_packaged(request):
    root = request.config.rootpath
    for name in container.SCHEMA_NAMES:
        shipped = json.loads((root / "docs" / "schemas" / f"{name}.schema.json").read_text())
        assert shipped == container.load_schema(name)
