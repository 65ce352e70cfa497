import numpy as np
import pytest

from rppgaug.core import Sample, SignalTrace, VideoClip


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)


def make_sample(t=180, h=16, w=16, c=3, fps=30.0, seed=0, sample_id="s0", hr=None):
    rng = np.random.default_rng(seed)
    frames = rng.random((t, h, w, c), dtype=np.float32)
    trace = np.sin(2 * np.pi * 1.5 * np.arange(t) / fps)
    return Sample(VideoClip(frames, fps), SignalTrace(trace, fps), sample_id, hr)


@pytest.fixture
def sample():
    return make_sample()


@pytest.fixture
def textured_clip():
    """Smooth but non-trivial 2-frame texture, 72x72 RGB."""
    y, x = np.mgrid[0:72, 0:72].astype(np.float64)
    base = 0.5 + 0.25 * np.sin(x / 3.0) * np.cos(y / 5.0)
    rgb = np.stack([base, 1 - base, 0.5 * base + 0.25], axis=-1)
    frames = np.stack([rgb, rgb[::-1]], axis=0)
    return VideoClip(frames, 30.0)
