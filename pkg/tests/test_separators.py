import sys

import numpy as np
import pytest

from remixsep.audio import AudioBuffer, ShapeMismatchError
from remixsep.metrics import si_snr
from remixsep.separators import (
    ContractionModelParams,
    contraction_model,
    estimate_noise_profile,
    external_model,
    identity_model,
    oracle_irm_model,
    spectral_gate_model,
)
from remixsep.wire import ChildExitedError, WireProtocolError, WireTimeoutError


def _buf(arr, rate=16000):
    return AudioBuffer(arr, rate)


def _rand(rng, channels=1, n=16000, scale=0.5, rate=16000):
    return _buf(scale * rng.standard_normal((channels, n)), rate)


# ---------------------------------------------------------------------------
# identity

def test_identity_is_bit_exact():
    rng = np.random.default_rng(0)
    x = _rand(rng)
    model = identity_model()
    assert np.array_equal(model(x).samples, x.samples)
    assert model.parallel_safe


# ---------------------------------------------------------------------------
# contraction

def test_contraction_fixed_point():
    rng = np.random.default_rng(1)
    p = _rand(rng)
    model = contraction_model(ContractionModelParams(p, 0.5))
    assert np.allclose(model(p).samples, p.samples, rtol=0, atol=0)


def test_contraction_alpha_zero_maps_to_target():
    rng = np.random.default_rng(2)
    p, x = _rand(rng), _rand(rng)
    model = contraction_model(ContractionModelParams(p, 0.0))
    assert np.array_equal(model(x).samples, p.samples)


def test_contraction_formula():
    rng = np.random.default_rng(3)
    p, x = _rand(rng), _rand(rng)
    model = contraction_model(ContractionModelParams(p, 0.3))
    assert np.array_equal(model(x).samples, p.samples + 0.3 * (x.samples - p.samples))


def test_contraction_exact_lipschitz_scaling():
    rng = np.random.default_rng(4)
    p = _rand(rng)
    alpha = 0.7
    model = contraction_model(ContractionModelParams(p, alpha))
    for _ in range(5):
        x1, x2 = _rand(rng), _rand(rng)
        lhs = np.linalg.norm(model(x1).samples - model(x2).samples)
        rhs = alpha * np.linalg.norm(x1.samples - x2.samples)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_contraction_validates_alpha_and_shape():
    rng = np.random.default_rng(5)
    p = _rand(rng)
    with pytest.raises(ValueError):
        ContractionModelParams(p, 1.0)
    with pytest.raises(ValueError):
        ContractionModelParams(p, -0.1)
    model = contraction_model(ContractionModelParams(p, 0.5))
    with pytest.raises(ShapeMismatchError):
        model(_rand(rng, n=100))


# ---------------------------------------------------------------------------
# spectral gate

def test_spectral_gate_suppresses_matching_noise():
    rng = np.random.default_rng(6)
    noise = _rand(rng, n=32000)
    profile = estimate_noise_profile(noise)
    model = spectral_gate_model(profile, over_subtraction=1.0)
    probe = _rand(rng, n=16000)  # fresh white noise, same statistics
    out = model(probe)
    assert out.samples.shape == probe.samples.shape
    assert np.sum(out.samples**2) < 0.10 * np.sum(probe.samples**2)


def test_spectral_gate_preserves_out_of_band_tone():
    rng = np.random.default_rng(7)
    rate, n = 16000, 32000
    t = np.arange(n) / rate
    tone = _buf(0.5 * np.sin(2 * np.pi * 440.0 * t), rate)
    # noise profile concentrated far from the tone (5-7 kHz band)
    white = rng.standard_normal((1, n))
    spectrum = np.fft.rfft(white, axis=1)
    freqs = np.fft.rfftfreq(n, 1 / rate)
    spectrum[:, (freqs < 5000) | (freqs > 7000)] = 0
    noise = _buf(0.1 * np.fft.irfft(spectrum, n=n, axis=1), rate)
    model = spectral_gate_model(estimate_noise_profile(noise), over_subtraction=1.0)
    out = model(tone)
    in_energy = np.sum(tone.samples**2)
    out_energy = np.sum(out.samples**2)
    assert abs(10 * np.log10(out_energy / in_energy)) < 1.0


def test_spectral_gate_silence_to_silence():
    silent = _buf(np.zeros((1, 16000)))
    model = spectral_gate_model(None, over_subtraction=1.0)
    assert np.allclose(model(silent).samples, 0.0)


def test_spectral_gate_rejects_low_over_subtraction():
    with pytest.raises(ValueError):
        spectral_gate_model(None, over_subtraction=0.5)


def test_spectral_gate_is_pure_given_profile():
    rng = np.random.default_rng(8)
    noise = _rand(rng, n=32000)
    model = spectral_gate_model(estimate_noise_profile(noise), 1.5)
    x = _rand(rng)
    assert np.array_equal(model(x).samples, model(x).samples)


# ---------------------------------------------------------------------------
# oracle IRM

def test_oracle_irm_near_identity_on_clean_input():
    rng = np.random.default_rng(9)
    reference = _rand(rng, n=32000)
    model = oracle_irm_model(reference)
    out = model(reference)
    assert si_snr(reference, out).value > 40.0


def test_oracle_irm_improves_noisy_input():
    rng = np.random.default_rng(10)
    rate, n = 16000, 32000
    t = np.arange(n) / rate
    reference = _buf(0.5 * np.sin(2 * np.pi * 330.0 * t), rate)
    white = rng.standard_normal((1, n))
    spectrum = np.fft.rfft(white, axis=1)
    freqs = np.fft.rfftfreq(n, 1 / rate)
    spectrum[:, freqs < 4000] = 0
    noise = 0.4 * np.fft.irfft(spectrum, n=n, axis=1)
    mixture = _buf(reference.samples + noise, rate)
    model = oracle_irm_model(reference)
    out = model(mixture)
    assert si_snr(reference, out).value > si_snr(reference, mixture).value


def test_oracle_irm_zero_reference_gives_silence():
    rng = np.random.default_rng(11)
    zero = _buf(np.zeros((1, 16000)))
    model = oracle_irm_model(zero)
    out = model(_rand(rng))
    assert np.max(np.abs(out.samples)) < 1e-6


# ---------------------------------------------------------------------------
# external model (wire protocol)

IDENTITY_CHILD = """
import json, struct, sys
while True:
    line = sys.stdin.buffer.readline()
    if not line:
        break
    h = json.loads(line)
    n = h["channels"] * h["num_samples"] * 4
    payload = sys.stdin.buffer.read(n)
    sys.stdout.buffer.write(json.dumps(h).encode() + b"\\n" + payload)
    sys.stdout.buffer.flush()
"""

GAIN_CHILD = """
import json, sys
import numpy as np
while True:
    line = sys.stdin.buffer.readline()
    if not line:
        break
    h = json.loads(line)
    n = h["channels"] * h["num_samples"] * 4
    arr = np.frombuffer(sys.stdin.buffer.read(n), dtype="<f4") * np.float32(0.5)
    sys.stdout.buffer.write(json.dumps(h).encode() + b"\\n" + arr.astype("<f4").tobytes())
    sys.stdout.buffer.flush()
"""


def _child(tmp_path, source, name="child.py"):
    path = tmp_path / name
    path.write_text(source)
    return [sys.executable, str(path)]


def test_external_identity_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(12)
    # float32-representable samples survive the wire bit-exactly
    samples = rng.standard_normal((2, 500)).astype(np.float32).astype(np.float64)
    x = _buf(samples)
    model = external_model(_child(tmp_path, IDENTITY_CHILD))
    try:
        out = model(x)
        assert np.array_equal(out.samples, samples)
        out2 = model(x)  # child persists across calls
        assert np.array_equal(out2.samples, samples)
    finally:
        model.close()


def test_external_gain_child(tmp_path):
    rng = np.random.default_rng(13)
    x = _rand(rng, channels=2, n=400)
    model = external_model(_child(tmp_path, GAIN_CHILD))
    try:
        out = model(x)
        assert np.allclose(out.samples, 0.5 * x.samples, atol=1e-6)
    finally:
        model.close()


def test_external_child_crash_surfaces_diagnostic(tmp_path):
    source = 'import sys\nprint("boom: config missing", file=sys.stderr)\nsys.exit(3)\n'
    model = external_model(_child(tmp_path, source))
    rng = np.random.default_rng(14)
    with pytest.raises(ChildExitedError, match="boom"):
        model(_rand(rng, n=64))
    model.close()


def test_external_malformed_reply(tmp_path):
    source = (
        "import sys\n"
        "sys.stdin.buffer.readline()\n"
        'sys.stdout.write("this is not json\\n")\n'
        "sys.stdout.flush()\n"
        "import time; time.sleep(5)\n"
    )
    model = external_model(_child(tmp_path, source), timeout=10.0)
    rng = np.random.default_rng(15)
    with pytest.raises(WireProtocolError):
        model(_rand(rng, n=64))
    model.close()


def test_external_timeout(tmp_path):
    source = "import time\ntime.sleep(60)\n"
    model = external_model(_child(tmp_path, source), timeout=0.5)
    rng = np.random.default_rng(16)
    with pytest.raises(WireTimeoutError):
        model(_rand(rng, n=64))
    model.close()


def test_external_wrong_shape_reply_rejected(tmp_path):
    source = (
        "import json, sys\n"
        "line = sys.stdin.buffer.readline()\n"
        "h = json.loads(line)\n"
        "sys.stdin.buffer.read(h['channels'] * h['num_samples'] * 4)\n"
        "h['num_samples'] = 1\n"
        "sys.stdout.buffer.write(json.dumps(h).encode() + b'\\n' + b'\\x00' * (h['channels'] * 4))\n"
        "sys.stdout.buffer.flush()\n"
        "import time; time.sleep(5)\n"
    )
    model = external_model(_child(tmp_path, source), timeout=10.0)
    rng = np.random.default_rng(17)
    with pytest.raises(WireProtocolError):
        model(_rand(rng, n=64))
    model.close()


def test_every_builtin_preserves_shape():
    rng = np.random.default_rng(18)
    x = _rand(rng, channels=2, n=7777)
    reference = _rand(rng, channels=2, n=7777)
    noise = _rand(rng, channels=2, n=7777)
    models = [
        identity_model(),
        contraction_model(ContractionModelParams(reference, 0.5)),
        spectral_gate_model(estimate_noise_profile(noise), 1.5),
        oracle_irm_model(reference),
    ]
    for model in models:
        out = model(x)
        assert out.samples.shape == x.samples.shape
        assert out.sample_rate == x.sample_rate
