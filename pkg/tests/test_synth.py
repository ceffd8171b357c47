import json

import numpy as np
import pytest

from remixsep.audio import load_wav
from remixsep.metrics import si_snr, song_chunk_sdrs
from remixsep.synth import (
    chunk_sdr_fixture,
    tone_noise_corpus,
    tone_noise_problem,
    write_chunk_sdr_fixture,
    write_tone_noise_corpus,
)


def test_tone_noise_problem_shape_and_mixture_identity():
    problem = tone_noise_problem(0, 3)
    assert problem.mixture.num_samples == 16000
    assert problem.mixture.channels == 1
    assert np.array_equal(
        problem.mixture.samples, problem.reference.samples + problem.noise.samples
    )
    assert problem.label == "tone0003"


def test_tone_noise_is_deterministic_per_seed():
    a = tone_noise_problem(42, 7)
    b = tone_noise_problem(42, 7)
    c = tone_noise_problem(43, 7)
    assert np.array_equal(a.mixture.samples, b.mixture.samples)
    assert not np.array_equal(a.mixture.samples, c.mixture.samples)


def test_tone_noise_corpus_varies_across_problems():
    problems = tone_noise_corpus(5, seed=1)
    assert len(problems) == 5
    assert len({p.label for p in problems}) == 5
    snrs = [si_snr(p.reference, p.mixture).value for p in problems]
    assert len(set(round(s, 6) for s in snrs)) == 5


def test_tone_noise_mixture_snr_in_declared_range():
    for i in range(10):
        p = tone_noise_problem(9, i)
        ref_energy = np.sum(p.reference.samples**2)
        noise_energy = np.sum(p.noise.samples**2)
        snr = 10 * np.log10(ref_energy / noise_energy)
        assert -0.5 <= snr <= 10.5


def test_write_tone_noise_corpus_round_trips(tmp_path):
    problems = tone_noise_corpus(3, seed=5)
    manifest = write_tone_noise_corpus(problems, tmp_path, 5, {"count": 3})
    assert len(manifest["problems"]) == 3
    loaded = json.loads((tmp_path / "manifest.json").read_text())
    assert loaded["seed"] == 5
    for entry, problem in zip(loaded["problems"], problems):
        mixture = load_wav(tmp_path / entry["mixture"])
        # float32 persistence: exact at float32 resolution
        assert np.allclose(mixture.samples, problem.mixture.samples, atol=1e-7)


def test_chunk_fixture_hits_declared_sdrs():
    pairs, manifest = chunk_sdr_fixture(songs=3, chunks_per_song=3, seed=11)
    for (ref, est), entry in zip(pairs, manifest["songs"]):
        measured = song_chunk_sdrs(ref, est)
        assert measured == pytest.approx(entry["chunk_sdrs_db"], abs=1e-9)
        assert float(np.median(measured)) == pytest.approx(
            entry["median_chunk_sdr_db"], abs=1e-9
        )


def test_chunk_fixture_partial_tail_present():
    pairs, manifest = chunk_sdr_fixture(songs=1, chunks_per_song=2, seed=3)
    ref, est = pairs[0]
    expected = 2 * 16000 + int(round(manifest["tail_seconds"] * 16000))
    assert ref.num_samples == expected


def test_chunk_fixture_write_and_reload(tmp_path):
    pairs, manifest = chunk_sdr_fixture(songs=2, chunks_per_song=3, seed=8)
    write_chunk_sdr_fixture(pairs, manifest, tmp_path)
    loaded = json.loads((tmp_path / "manifest.json").read_text())
    for entry in loaded["songs"]:
        ref = load_wav(tmp_path / entry["reference"])
        est = load_wav(tmp_path / entry["estimate"])
        measured = song_chunk_sdrs(ref, est)
        # float32 WAV round trip costs ~1e-6 dB, well inside the 0.01 dB gate
        assert measured == pytest.approx(entry["chunk_sdrs_db"], abs=0.01)
