"""Sample-domain and time-frequency-domain primitives.

AudioBuffer is the carrier type for every signal in the package:
mixtures, references, noise excerpts, separator outputs. Buffers are
float64 internally regardless of file encoding (the theory checks
need 1e-10 tolerances) and immutable after construction.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels


class WavError(Exception):
    """Base class for WAV persistence failures."""


class WavFormatError(WavError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedWavError(WavError):
    """The file is valid RIFF but uses an encoding we do not read."""


class ShapeMismatchError(ValueError):
    """Operands differ in channel count, length, or sample rate."""


def _as_channel_major(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"samples must be 1-D or 2-D (channels, samples), got ndim={arr.ndim}")
    return arr


@dataclass(frozen=True)
class AudioBuffer:
    """Immutable multichannel signal: float64 samples, shape (channels, num_samples)."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = _as_channel_major(self.samples)
        if arr.base is not None or arr is self.samples:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        if not isinstance(self.sample_rate, (int, np.integer)) or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @classmethod
    def _from_owned(cls, arr: np.ndarray, sample_rate: int) -> "AudioBuffer":
        # Fast path for arrays created internally: skips the defensive copy.
        buf = object.__new__(cls)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(buf, "samples", arr)
        object.__setattr__(buf, "sample_rate", int(sample_rate))
        return buf

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def same_shape(self, other: "AudioBuffer") -> bool:
        return (
            self.samples.shape == other.samples.shape
            and self.sample_rate == other.sample_rate
        )

    def require_same_shape(self, other: "AudioBuffer", what: str = "buffers"):
        if not self.same_shape(other):
            raise ShapeMismatchError(
                f"{what} must match: {self.samples.shape}@{self.sample_rate}Hz "
                f"vs {other.samples.shape}@{other.sample_rate}Hz"
            )


@dataclass(frozen=True)
class Spectrogram:
    """Complex STFT frames, shape (channels, num_frames, frame_size//2+1)."""

    frames: np.ndarray
    frame_size: int
    hop_size: int
    window: str
    sample_rate: int

    def __post_init__(self):
        if self.hop_size > self.frame_size:
            raise ValueError("hop_size must be <= frame_size")
        if self.frames.ndim != 3:
            raise ValueError("frames must have shape (channels, num_frames, bins)")

    @property
    def channels(self) -> int:
        return self.frames.shape[0]

    @property
    def num_frames(self) -> int:
        return self.frames.shape[1]


# ---------------------------------------------------------------------------
# WAV persistence (RIFF, PCM-16 and IEEE-float-32, little-endian)

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


def load_wav(path) -> AudioBuffer:
    """Read a PCM-16 or IEEE-float-32 WAV file.

    PCM-16 samples are scaled by 1/32768. Raises FileNotFoundError for a
    missing file, WavFormatError for a broken container, and
    UnsupportedWavError for encodings outside the two we support.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if chunk_size < 16 or len(body) < 16:
                raise WavFormatError(f"{path}: fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise WavFormatError(f"{path}: data chunk truncated")
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if payload is None:
        raise WavFormatError(f"{path}: missing data chunk")

    audio_format, channels, sample_rate, _, block_align, bits = fmt
    if channels < 1 or sample_rate < 1:
        raise WavFormatError(f"{path}: invalid fmt fields (channels={channels}, rate={sample_rate})")

    if audio_format == _FMT_PCM and bits == 16:
        dtype = np.dtype("<i2")
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedWavError(
            f"{path}: unsupported encoding (format={audio_format}, bits={bits}); "
            "only PCM-16 and IEEE-float-32 are read"
        )

    frame_bytes = channels * dtype.itemsize
    if block_align not in (0, frame_bytes):
        raise WavFormatError(f"{path}: block_align {block_align} inconsistent with format")
    if len(payload) % frame_bytes != 0:
        raise WavFormatError(f"{path}: data size is not a whole number of frames")

    flat = np.frombuffer(payload, dtype=dtype)
    interleaved = flat.reshape(-1, channels) if flat.size else flat.reshape(0, channels)
    if dtype.kind == "i":
        arr = interleaved.T.astype(np.float64) / 32768.0
    else:
        arr = interleaved.T.astype(np.float64)
    return AudioBuffer._from_owned(arr, sample_rate)


def save_wav(buffer: AudioBuffer, path, encoding: str = "float32"):
    """Write a buffer as WAV. float32 round-trips bit-exactly through load_wav."""
    if encoding == "pcm16":
        scaled = np.clip(np.round(buffer.samples * 32768.0), -32768, 32767)
        payload = scaled.T.astype("<i2").tobytes()
        audio_format, bits = _FMT_PCM, 16
    elif encoding == "float32":
        payload = buffer.samples.T.astype("<f4").tobytes()
        audio_format, bits = _FMT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"encoding must be 'pcm16' or 'float32', got {encoding!r}")

    channels = buffer.channels
    block_align = channels * bits // 8
    byte_rate = buffer.sample_rate * block_align
    header = b"".join(
        [
            b"RIFF",
            struct.pack("<I", 36 + len(payload)),
            b"WAVE",
            b"fmt ",
            struct.pack("<IHHIIHH", 16, audio_format, channels, buffer.sample_rate, byte_rate, block_align, bits),
            b"data",
            struct.pack("<I", len(payload)),
        ]
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


# ---------------------------------------------------------------------------
# mixing

def mix(a: AudioBuffer, b: AudioBuffer, gain_a: float, gain_b: float) -> AudioBuffer:
    """Elementwise gain_a*a + gain_b*b. Shapes and rates must match exactly."""
    a.require_same_shape(b, "mix operands")
    out = gain_a * a.samples + gain_b * b.samples
    return AudioBuffer._from_owned(out, a.sample_rate)


# ---------------------------------------------------------------------------
# STFT / iSTFT

_WINDOWS = ("hann", "rect")


def make_window(name: str, frame_size: int) -> np.ndarray:
    if name == "hann":
        # Periodic Hann: COLA at hop = frame/2 and frame/4.
        n = np.arange(frame_size, dtype=np.float64)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / frame_size)
    if name == "rect":
        return np.ones(frame_size)
    raise ValueError(f"unknown window {name!r}; supported: {_WINDOWS}")


class ColaError(ValueError):
    """The window/hop combination does not overlap-add to a constant."""


def _check_cola(window: np.ndarray, frame_size: int, hop_size: int):
    if hop_size < 1 or hop_size > frame_size:
        raise ColaError(f"hop_size must be in [1, frame_size], got {hop_size}")
    span = 2 * frame_size + 8 * hop_size
    acc = np.zeros(span)
    offset = 0
    last = 0
    while offset + frame_size <= span:
        acc[offset : offset + frame_size] += window
        last = offset
        offset += hop_size
    interior = acc[frame_size : last]
    lo, hi = interior.min(), interior.max()
    if lo <= 0.0 or (hi - lo) > 1e-6 * hi:
        raise ColaError(
            f"window/hop combination is not COLA (overlap-add varies in [{lo:.3g}, {hi:.3g}])"
        )


def stft(buffer: AudioBuffer, frame_size: int = 1024, hop_size: int = 512, window: str = "hann") -> Spectrogram:
    """Short-time Fourier transform; trailing samples beyond the last full frame are dropped."""
    if frame_size < 2 or frame_size & (frame_size - 1):
        raise ValueError(f"frame_size must be a power of two >= 2, got {frame_size}")
    win = make_window(window, frame_size)
    _check_cola(win, frame_size, hop_size)

    n = buffer.num_samples
    num_frames = 1 + (n - frame_size) // hop_size if n >= frame_size else 0
    bins = frame_size // 2 + 1
    if num_frames == 0:
        frames = np.zeros((buffer.channels, 0, bins), dtype=np.complex128)
        return Spectrogram(frames, frame_size, hop_size, window, buffer.sample_rate)

    views = np.lib.stride_tricks.sliding_window_view(buffer.samples, frame_size, axis=1)
    segments = views[:, :: hop_size][:, :num_frames] * win
    frames = np.fft.rfft(segments, axis=2)
    return Spectrogram(frames, frame_size, hop_size, window, buffer.sample_rate)


def istft(spec: Spectrogram) -> AudioBuffer:
    """Inverse STFT via windowed overlap-add with window-square normalization.

    Reconstruction is exact (to rounding) wherever the window-square sum is
    nonzero; the guaranteed region excludes one frame at each edge.
    """
    win = make_window(spec.window, spec.frame_size)
    channels = spec.channels
    if spec.num_frames == 0:
        return AudioBuffer._from_owned(np.zeros((channels, 0)), spec.sample_rate)

    out = []
    for c in range(channels):
        time_frames = np.fft.irfft(spec.frames[c], n=spec.frame_size, axis=1)
        acc, wsq = kernels.overlap_add(np.ascontiguousarray(time_frames), win, spec.hop_size)
        # Samples with (near-)zero window coverage are zeroed, not divided:
        # after spectral modification the frame content there is unbounded
        # relative to the vanishing normalizer.
        covered = wsq > 1e-8
        acc[covered] /= wsq[covered]
        acc[~covered] = 0.0
        out.append(acc)
    return AudioBuffer._from_owned(np.stack(out), spec.sample_rate)
