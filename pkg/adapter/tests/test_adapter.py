import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(SRC))

from sep_adapter import AdapterLoop, AdapterProtocolError  # noqa: E402
from sep_adapter.transforms import (  # noqa: E402
    build_transform,
    denoise_transform,
    gain_transform,
    identity_transform,
)


def _frame(audio: np.ndarray, sample_rate: int = 16000) -> bytes:
    channels, num_samples = audio.shape
    header = {"sample_rate": sample_rate, "channels": channels, "num_samples": num_samples}
    return json.dumps(header).encode() + b"\n" + np.ascontiguousarray(
        audio.T, dtype="<f4"
    ).tobytes()


def _read_reply(stream) -> tuple[dict, np.ndarray]:
    header = json.loads(stream.readline())
    n = header["channels"] * header["num_samples"] * 4
    payload = stream.read(n)
    audio = (
        np.frombuffer(payload, dtype="<f4")
        .reshape(header["num_samples"], header["channels"])
        .T.astype(np.float64)
    )
    return header, audio


def _spawn(*args):
    return subprocess.Popen(
        [sys.executable, "-m", "sep_adapter", *args],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        env={"PYTHONPATH": str(SRC), "PATH": "/usr/bin:/bin"},
    )


# ---------------------------------------------------------------------------
# in-process loop

def test_loop_identity_round_trip():
    rng = np.random.default_rng(0)
    audio = rng.standard_normal((2, 300)).astype(np.float32).astype(np.float64)
    out_stream = io.BytesIO()
    loop = AdapterLoop(io.BytesIO(_frame(audio)), out_stream, identity_transform())
    assert loop.serve() == 1
    out_stream.seek(0)
    header, result = _read_reply(out_stream)
    assert header == {"sample_rate": 16000, "channels": 2, "num_samples": 300}
    assert np.array_equal(result, audio)


def test_loop_serves_multiple_requests():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((1, 64)).astype(np.float32).astype(np.float64)
    b = rng.standard_normal((1, 32)).astype(np.float32).astype(np.float64)
    out_stream = io.BytesIO()
    loop = AdapterLoop(io.BytesIO(_frame(a) + _frame(b)), out_stream, identity_transform())
    assert loop.serve() == 2
    out_stream.seek(0)
    _, first = _read_reply(out_stream)
    _, second = _read_reply(out_stream)
    assert np.array_equal(first, a)
    assert np.array_equal(second, b)


def test_loop_rejects_malformed_header():
    loop = AdapterLoop(io.BytesIO(b"not json\n"), io.BytesIO(), identity_transform())
    with pytest.raises(AdapterProtocolError, match="malformed header"):
        loop.serve()


def test_loop_rejects_truncated_payload():
    rng = np.random.default_rng(2)
    audio = rng.standard_normal((1, 100))
    data = _frame(audio)[:-40]
    loop = AdapterLoop(io.BytesIO(data), io.BytesIO(), identity_transform())
    with pytest.raises(AdapterProtocolError, match="truncated"):
        loop.serve()


def test_loop_rejects_shape_changing_transform():
    rng = np.random.default_rng(3)
    audio = rng.standard_normal((1, 50))
    loop = AdapterLoop(
        io.BytesIO(_frame(audio)), io.BytesIO(), lambda a: a[:, :10]
    )
    with pytest.raises(AdapterProtocolError, match="shape"):
        loop.serve()


# ---------------------------------------------------------------------------
# transforms

def test_gain_transform():
    rng = np.random.default_rng(4)
    audio = rng.standard_normal((2, 128))
    assert np.array_equal(gain_transform(0.5)(audio), 0.5 * audio)


def test_denoise_strength_zero_is_identity():
    rng = np.random.default_rng(5)
    audio = rng.standard_normal((1, 5000))
    assert np.array_equal(denoise_transform(0.0)(audio), audio)


def test_denoise_reduces_white_noise_energy():
    rng = np.random.default_rng(6)
    audio = rng.standard_normal((1, 16000))
    out = denoise_transform(1.0)(audio)
    assert out.shape == audio.shape
    assert np.sum(out**2) < np.sum(audio**2)


def test_denoise_preserves_shape_on_short_and_stereo_input():
    rng = np.random.default_rng(7)
    for shape in ((1, 100), (2, 3000), (1, 1024)):
        audio = rng.standard_normal(shape)
        assert denoise_transform(0.7)(audio).shape == shape


def test_denoise_rejects_bad_strength():
    with pytest.raises(ValueError):
        denoise_transform(1.5)
    with pytest.raises(ValueError):
        build_transform("denoise", strength=-0.1)


def test_build_transform_unknown_name():
    with pytest.raises(ValueError):
        build_transform("superresolution")


# ---------------------------------------------------------------------------
# subprocess (the real contract surface)

def test_subprocess_identity_round_trip():
    rng = np.random.default_rng(8)
    audio = rng.standard_normal((2, 400)).astype(np.float32).astype(np.float64)
    proc = _spawn("--transform", "identity")
    try:
        proc.stdin.write(_frame(audio))
        proc.stdin.flush()
        _, result = _read_reply(proc.stdout)
        assert np.array_equal(result, audio)
        # second request through the same child
        proc.stdin.write(_frame(0.5 * audio))
        proc.stdin.flush()
        _, result2 = _read_reply(proc.stdout)
        assert np.allclose(result2, 0.5 * audio, atol=1e-7)
    finally:
        proc.stdin.close()
        assert proc.wait(timeout=10) == 0


def test_subprocess_gain():
    rng = np.random.default_rng(9)
    audio = rng.standard_normal((1, 256))
    proc = _spawn("--transform", "gain", "--gain", "0.25")
    try:
        proc.stdin.write(_frame(audio))
        proc.stdin.flush()
        _, result = _read_reply(proc.stdout)
        assert np.allclose(result, 0.25 * audio, atol=1e-6)
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)


def test_subprocess_truncated_payload_exits_nonzero():
    rng = np.random.default_rng(10)
    audio = rng.standard_normal((1, 100))
    proc = _spawn("--transform", "identity")
    proc.stdin.write(_frame(audio)[:-40])
    proc.stdin.close()
    assert proc.wait(timeout=10) != 0
    stderr = proc.stderr.read().decode()
    assert "truncated" in json.loads(stderr)["error"]


def test_subprocess_malformed_header_exits_nonzero():
    proc = _spawn("--transform", "identity")
    proc.stdin.write(b"garbage that is not a header\n")
    proc.stdin.close()
    assert proc.wait(timeout=10) != 0
    assert "error" in json.loads(proc.stderr.read().decode())


def test_subprocess_clean_eof_exits_zero():
    proc = _spawn("--transform", "identity")
    proc.stdin.close()
    assert proc.wait(timeout=10) == 0
