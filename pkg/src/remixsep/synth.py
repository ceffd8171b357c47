"""Seeded synthetic corpora for refinement runs and metric fixtures.

tone_noise problems pair a low-band harmonic tone (the reference) with
band-limited high-frequency noise, so the spectral gate has something to
separate; chunk_sdr fixtures add per-chunk calibrated noise so every
chunk's SDR hits a manifest-declared target exactly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .audio import AudioBuffer, save_wav
from .refine import MixtureProblem


def _band_limited_noise(rng, channels: int, n: int, sample_rate: int) -> np.ndarray:
    nyquist = sample_rate / 2.0
    lo, hi = 0.44 * nyquist, 0.94 * nyquist
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    mask = (freqs >= lo) & (freqs <= hi)
    white = rng.standard_normal((channels, n))
    spectrum = np.fft.rfft(white, axis=1) * mask
    return np.fft.irfft(spectrum, n=n, axis=1)


def tone_noise_problem(
    seed: int, index: int, sample_rate: int = 16000, seconds: float = 1.0, channels: int = 1
) -> MixtureProblem:
    """One deterministic tone+noise problem: mixture = reference + noise."""
    rng = np.random.default_rng([seed, index])
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    nyquist = sample_rate / 2.0
    f0 = rng.uniform(0.025 * nyquist, 0.1875 * nyquist)
    amp = rng.uniform(0.3, 0.6)

    ref = np.empty((channels, n))
    for c in range(channels):
        phase = rng.uniform(0, 2 * np.pi)
        ref[c] = amp * np.sin(2 * np.pi * f0 * t + phase) + 0.4 * amp * np.sin(
            2 * np.pi * 2 * f0 * t + 1.7 * phase
        )

    noise = _band_limited_noise(rng, channels, n, sample_rate)
    snr_db = rng.uniform(0.0, 10.0)
    ref_rms = np.sqrt(np.mean(ref**2))
    noise_rms = np.sqrt(np.mean(noise**2))
    noise *= ref_rms / (10.0 ** (snr_db / 20.0) * noise_rms)

    reference = AudioBuffer._from_owned(ref, sample_rate)
    noise_buf = AudioBuffer._from_owned(noise, sample_rate)
    mixture = AudioBuffer._from_owned(ref + noise, sample_rate)
    return MixtureProblem(mixture, reference, noise_buf, label=f"tone{index:04d}")


def tone_noise_corpus(
    count: int, seed: int, sample_rate: int = 16000, seconds: float = 1.0, channels: int = 1
) -> list[MixtureProblem]:
    return [tone_noise_problem(seed, i, sample_rate, seconds, channels) for i in range(count)]


def write_tone_noise_corpus(problems, out_dir, seed: int, config: dict) -> dict:
    """Write (mixture, reference, noise) WAV triples plus a manifest JSON."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for problem in problems:
        files = {}
        for role, buf in (
            ("mixture", problem.mixture),
            ("reference", problem.reference),
            ("noise", problem.noise),
        ):
            name = f"{problem.label}.{role}.wav"
            _atomic_save_wav(buf, os.path.join(out_dir, name))
            files[role] = name
        entries.append({"label": problem.label, **files})
    manifest = {"kind": "tone_noise", "seed": seed, "config": config, "problems": entries}
    _atomic_write_json(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest


def chunk_sdr_fixture(
    songs: int = 3,
    chunks_per_song: int = 3,
    seed: int = 0,
    sample_rate: int = 16000,
    tail_seconds: float = 0.37,
) -> tuple[list[tuple[AudioBuffer, AudioBuffer]], dict]:
    """Songs whose 1 s chunks carry calibrated SDRs; the partial tail is junk.

    The estimate of chunk k is reference + noise scaled so that
    10*log10(sum(ref^2)/sum(noise^2)) equals the declared target. The tail
    (shorter than one chunk) has a terrible SDR, so any consumer that fails
    to drop partial chunks will miss the declared values.
    """
    rng = np.random.default_rng(seed)
    chunk_len = sample_rate
    tail = int(round(tail_seconds * sample_rate))
    pairs = []
    manifest_songs = []
    for s in range(songs):
        n = chunks_per_song * chunk_len + tail
        t = np.arange(n) / sample_rate
        f0 = rng.uniform(150.0, 1200.0)
        ref = 0.5 * np.sin(2 * np.pi * f0 * t)
        est = ref.copy()
        targets = rng.uniform(3.0, 20.0, chunks_per_song)
        for k, target_db in enumerate(targets):
            sl = slice(k * chunk_len, (k + 1) * chunk_len)
            noise = rng.standard_normal(chunk_len)
            scale = np.sqrt(np.sum(ref[sl] ** 2) / (10.0 ** (target_db / 10.0) * np.sum(noise**2)))
            est[sl] += scale * noise
        if tail:
            est[-tail:] += rng.standard_normal(tail)  # SDR ~0 dB, must be dropped
        ref_buf = AudioBuffer._from_owned(ref.reshape(1, -1), sample_rate)
        est_buf = AudioBuffer._from_owned(est.reshape(1, -1), sample_rate)
        pairs.append((ref_buf, est_buf))
        manifest_songs.append(
            {
                "song": s,
                "tone_hz": f0,
                "chunk_sdrs_db": [float(x) for x in targets],
                "median_chunk_sdr_db": float(np.median(targets)),
            }
        )
    manifest = {
        "kind": "chunk_sdr_fixture",
        "seed": seed,
        "sample_rate": sample_rate,
        "chunk_seconds": 1.0,
        "tail_seconds": tail_seconds,
        "songs": manifest_songs,
        "expected_csdr_db": float(np.median([s["median_chunk_sdr_db"] for s in manifest_songs])),
    }
    return pairs, manifest


def write_chunk_sdr_fixture(pairs, manifest: dict, out_dir) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    for entry, (ref, est) in zip(manifest["songs"], pairs):
        ref_name = f"song{entry['song']}.reference.wav"
        est_name = f"song{entry['song']}.estimate.wav"
        _atomic_save_wav(ref, os.path.join(out_dir, ref_name))
        _atomic_save_wav(est, os.path.join(out_dir, est_name))
        entry["reference"] = ref_name
        entry["estimate"] = est_name
    _atomic_write_json(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest


def _atomic_save_wav(buffer: AudioBuffer, path: str):
    tmp = f"{path}.tmp-{os.getpid()}"
    save_wav(buffer, tmp, "float32")
    os.replace(tmp, path)


def _atomic_write_json(payload: dict, path: str):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
