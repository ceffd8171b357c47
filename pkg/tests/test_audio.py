import numpy as np
import pytest

from remixsep.audio import (
    AudioBuffer,
    ColaError,
    ShapeMismatchError,
    UnsupportedWavError,
    WavFormatError,
    istft,
    load_wav,
    mix,
    save_wav,
    stft,
)


def _buf(rng, channels=1, n=4096, rate=16000, scale=0.5):
    return AudioBuffer(scale * rng.standard_normal((channels, n)), rate)


# ---------------------------------------------------------------------------
# AudioBuffer

def test_buffer_basic_properties():
    buf = AudioBuffer(np.zeros((2, 100)), 8000)
    assert buf.channels == 2
    assert buf.num_samples == 100
    assert buf.duration == pytest.approx(100 / 8000)


def test_buffer_mono_from_1d():
    buf = AudioBuffer(np.arange(5.0), 16000)
    assert buf.samples.shape == (1, 5)


def test_buffer_zero_length_is_valid():
    buf = AudioBuffer(np.zeros((1, 0)), 16000)
    assert buf.num_samples == 0


def test_buffer_is_immutable():
    arr = np.zeros((1, 10))
    buf = AudioBuffer(arr, 16000)
    with pytest.raises(ValueError):
        buf.samples[0, 0] = 1.0
    arr[0, 0] = 5.0  # caller's array stays independent
    assert buf.samples[0, 0] == 0.0


def test_buffer_rejects_bad_rate():
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros((1, 4)), 0)
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros((1, 4)), -1)


# ---------------------------------------------------------------------------
# WAV persistence

def test_wav_pcm16_sine_round_trip(tmp_path):
    rate, freq, amp = 16000, 440.0, 0.6
    t = np.arange(rate) / rate
    buf = AudioBuffer(amp * np.sin(2 * np.pi * freq * t), rate)
    path = tmp_path / "tone.wav"
    save_wav(buf, path, "pcm16")
    loaded = load_wav(path)
    assert loaded.sample_rate == rate
    assert loaded.channels == 1
    assert loaded.num_samples == rate
    assert np.max(np.abs(loaded.samples)) == pytest.approx(amp, abs=1e-3)


def test_wav_empty_data_chunk(tmp_path):
    path = tmp_path / "empty.wav"
    save_wav(AudioBuffer(np.zeros((2, 0)), 44100), path, "pcm16")
    loaded = load_wav(path)
    assert loaded.num_samples == 0
    assert loaded.channels == 2
    assert loaded.sample_rate == 44100


def test_wav_float32_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(100):
        channels = int(rng.integers(1, 3))
        n = int(rng.integers(0, 500))
        # float32-representable payload: what we write is exactly what we stored
        samples = rng.standard_normal((channels, n)).astype(np.float32).astype(np.float64)
        buf = AudioBuffer(samples, 22050)
        path = tmp_path / f"r{i}.wav"
        save_wav(buf, path, "float32")
        loaded = load_wav(path)
        assert np.array_equal(loaded.samples, samples)


def test_wav_pcm16_quantization_bound(tmp_path):
    rng = np.random.default_rng(1)
    samples = rng.uniform(-1.0, 1.0, (2, 2000))
    buf = AudioBuffer(samples, 16000)
    path = tmp_path / "q.wav"
    save_wav(buf, path, "pcm16")
    loaded = load_wav(path)
    assert np.max(np.abs(loaded.samples - samples)) <= 1.0 / 32768.0


def test_wav_missing_file_is_distinct():
    with pytest.raises(FileNotFoundError):
        load_wav("/nonexistent/nothing.wav")


def test_wav_malformed_riff_is_distinct(tmp_path):
    path = tmp_path / "junk.wav"
    path.write_bytes(b"not a wav file at all")
    with pytest.raises(WavFormatError):
        load_wav(path)


def test_wav_truncated_data_is_malformed(tmp_path):
    path = tmp_path / "t.wav"
    save_wav(AudioBuffer(np.zeros((1, 100)), 8000), path, "pcm16")
    data = path.read_bytes()
    path.write_bytes(data[:-50])
    with pytest.raises(WavFormatError):
        load_wav(path)


def test_wav_unsupported_encoding_is_distinct(tmp_path):
    import struct

    # 8-bit PCM: valid RIFF, unsupported sample format
    payload = bytes(100)
    header = b"".join(
        [
            b"RIFF",
            struct.pack("<I", 36 + len(payload)),
            b"WAVE",
            b"fmt ",
            struct.pack("<IHHIIHH", 16, 1, 1, 8000, 8000, 1, 8),
            b"data",
            struct.pack("<I", len(payload)),
        ]
    )
    path = tmp_path / "u8.wav"
    path.write_bytes(header + payload)
    with pytest.raises(UnsupportedWavError):
        load_wav(path)


def test_wav_unwritable_path():
    buf = AudioBuffer(np.zeros((1, 4)), 8000)
    with pytest.raises(OSError):
        save_wav(buf, "/nonexistent-dir/out.wav")


def test_wav_stereo_interleaving(tmp_path):
    left = np.arange(4, dtype=np.float64) / 8
    right = -np.arange(4, dtype=np.float64) / 8
    buf = AudioBuffer(np.stack([left, right]), 8000)
    path = tmp_path / "st.wav"
    save_wav(buf, path, "float32")
    loaded = load_wav(path)
    assert np.array_equal(loaded.samples[0], left)
    assert np.array_equal(loaded.samples[1], right)


# ---------------------------------------------------------------------------
# mix

def test_mix_identity():
    rng = np.random.default_rng(2)
    a, b = _buf(rng), _buf(rng)
    assert np.array_equal(mix(a, b, 1.0, 0.0).samples, a.samples)


def test_mix_convexity_on_equal_inputs():
    rng = np.random.default_rng(3)
    a = _buf(rng)
    out = mix(a, a, 0.5, 0.5)
    assert np.allclose(out.samples, a.samples, rtol=0, atol=1e-15)


def test_mix_elementwise_oracle():
    rng = np.random.default_rng(4)
    p, q = _buf(rng, channels=2), _buf(rng, channels=2)
    out = mix(p, q, 0.7, 0.3)
    assert np.array_equal(out.samples, 0.7 * p.samples + 0.3 * q.samples)


def test_mix_bilinearity_property():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, b = _buf(rng, n=512), _buf(rng, n=512)
        g1, g2, h1, h2 = rng.uniform(-2, 2, 4)
        lhs = mix(a, b, g1, g2).samples + mix(a, b, h1, h2).samples
        rhs = mix(a, b, g1 + h1, g2 + h2).samples
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_mix_shape_mismatch_is_error():
    rng = np.random.default_rng(6)
    a = _buf(rng, channels=1)
    b = _buf(rng, channels=2)
    with pytest.raises(ShapeMismatchError):
        mix(a, b, 0.5, 0.5)
    c = AudioBuffer(a.samples, 8000)
    with pytest.raises(ShapeMismatchError):
        mix(a, c, 0.5, 0.5)


# ---------------------------------------------------------------------------
# STFT / iSTFT

def test_stft_of_silence_is_all_zero():
    buf = AudioBuffer(np.zeros((1, 4096)), 16000)
    spec = stft(buf)
    assert spec.num_frames > 0
    assert np.all(spec.frames == 0)


@pytest.mark.parametrize(
    "frame,hop,window",
    [(1024, 512, "hann"), (1024, 256, "hann"), (512, 256, "hann"), (256, 256, "rect"), (512, 256, "rect")],
)
def test_stft_round_trip_interior(frame, hop, window):
    rng = np.random.default_rng(8)
    n = frame + 40 * hop
    buf = AudioBuffer(rng.standard_normal((2, n)), 16000)
    rec = istft(stft(buf, frame, hop, window))
    assert rec.num_samples == n
    core = slice(frame, n - frame)
    err = np.linalg.norm(buf.samples[:, core] - rec.samples[:, core])
    assert err / np.linalg.norm(buf.samples[:, core]) <= 1e-6


def test_stft_sine_concentrates_in_one_bin():
    # Rectangular window, bin-centered frequency: the DFT has exactly one
    # nonzero positive-frequency bin. Cross-check against an explicit DFT sum.
    rate, frame = 16000, 512
    k = 37
    freq = k * rate / frame
    t = np.arange(frame * 4) / rate
    buf = AudioBuffer(0.5 * np.sin(2 * np.pi * freq * t), rate)
    spec = stft(buf, frame, frame, "rect")
    for m in range(spec.num_frames):
        mags = np.abs(spec.frames[0, m])
        energy = mags**2
        assert energy[k] / energy.sum() > 0.999
        segment = buf.samples[0, m * frame : (m + 1) * frame]
        dft_k = np.sum(segment * np.exp(-2j * np.pi * k * np.arange(frame) / frame))
        assert abs(spec.frames[0, m, k] - dft_k) <= 1e-9 * abs(dft_k)


def test_stft_rejects_non_cola():
    buf = AudioBuffer(np.zeros((1, 4096)), 16000)
    with pytest.raises(ColaError):
        stft(buf, 1024, 1024, "hann")  # no overlap: hann gaps to zero
    with pytest.raises(ColaError):
        stft(buf, 1024, 700, "hann")


def test_stft_rejects_non_power_of_two():
    buf = AudioBuffer(np.zeros((1, 4096)), 16000)
    with pytest.raises(ValueError):
        stft(buf, 1000, 500, "hann")


def test_stft_empty_and_short_buffers():
    empty = AudioBuffer(np.zeros((1, 0)), 16000)
    spec = stft(empty)
    assert spec.num_frames == 0
    assert istft(spec).num_samples == 0
    short = AudioBuffer(np.zeros((1, 100)), 16000)
    assert stft(short).num_frames == 0
