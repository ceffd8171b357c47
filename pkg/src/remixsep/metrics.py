"""Separation-quality metrics and the dispatch layer.

All ratio metrics are expressed in dB and clamped to [-100, +100] so that
candidate selection always has a total order (no infinities). A silent
reference makes SDR undefined: whole-signal si_snr raises, while sdr and
the chunked variants return/skip a ``None`` marker so chunk statistics
simply omit those windows.
"""

from __future__ import annotations

import atexit
import math
import shlex
import threading
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import kernels, wire
from .audio import AudioBuffer

if TYPE_CHECKING:
    from .refine import MixtureProblem

CAP_DB = 100.0
SILENT_THRESHOLD = 1e-8  # mean-square energy below which a reference chunk is skipped


class MetricError(Exception):
    """A metric could not be evaluated on the given inputs."""


class SilentReferenceError(MetricError):
    """The reference carries no energy, so the metric is undefined."""


class MissingReferenceError(MetricError):
    """An intrusive metric was requested without a reference signal."""


@dataclass(frozen=True)
class MetricScore:
    """A scalar quality score; ``capped`` marks values clamped at +/-100 dB."""

    value: float
    capped: bool = False


@dataclass(frozen=True)
class MetricKind:
    """Identifier for one metric; external metrics carry their command line."""

    name: str
    command: tuple[str, ...] = ()

    def __str__(self):
        if self.name == "external":
            return "external:" + " ".join(self.command)
        return self.name

    @property
    def intrusive(self) -> bool:
        return self.name != "external"


SI_SNR = MetricKind("si_snr")
SDR = MetricKind("sdr")
USDR_COMPONENT = MetricKind("usdr_component")
CSDR_COMPONENT = MetricKind("csdr_component")
SEARCH_SDR = MetricKind("search_sdr")
NEG_MSE = MetricKind("neg_mse")

BUILTIN_METRICS = {
    kind.name: kind
    for kind in (SI_SNR, SDR, USDR_COMPONENT, CSDR_COMPONENT, SEARCH_SDR, NEG_MSE)
}


def external(command) -> MetricKind:
    if isinstance(command, str):
        command = shlex.split(command)
    return MetricKind("external", tuple(command))


def parse_metric(spec: str) -> MetricKind:
    """Parse a CLI metric spec: a builtin name or ``external:<command>``."""
    if spec in BUILTIN_METRICS:
        return BUILTIN_METRICS[spec]
    if spec.startswith("external:"):
        return external(spec[len("external:") :])
    raise ValueError(
        f"unknown metric {spec!r}; builtin: {sorted(BUILTIN_METRICS)} or external:<command>"
    )


def _ratio_db(signal_energy: float, error_energy: float) -> MetricScore:
    if error_energy <= 0.0:
        return MetricScore(CAP_DB, capped=True)
    if signal_energy <= 0.0:
        return MetricScore(-CAP_DB, capped=True)
    db = 10.0 * math.log10(signal_energy / error_energy)
    if db >= CAP_DB:
        return MetricScore(CAP_DB, capped=True)
    if db <= -CAP_DB:
        return MetricScore(-CAP_DB, capped=True)
    return MetricScore(db)


def si_snr(reference: AudioBuffer, estimate: AudioBuffer) -> MetricScore:
    """Scale-invariant SNR in dB, averaged over channels.

    Both signals are mean-removed per channel, the estimate is projected
    onto the reference, and the score is 10*log10 of projection energy
    over residual energy. Invariant to positive rescaling of the estimate.
    """
    reference.require_same_shape(estimate, "si_snr inputs")
    n = reference.num_samples
    if n == 0:
        raise SilentReferenceError("si_snr undefined on empty signals")
    values = []
    capped = False
    for c in range(reference.channels):
        saa, proj, resid = kernels.sisnr_stats(reference.samples[c], estimate.samples[c])
        if saa < 1e-30 * n:
            raise SilentReferenceError(
                f"si_snr reference channel {c} has no energy after mean removal"
            )
        score = _ratio_db(proj, resid)
        values.append(score.value)
        capped = capped or score.capped
    return MetricScore(float(np.mean(values)), capped)


def sdr(reference: AudioBuffer, estimate: AudioBuffer) -> MetricScore | None:
    """Signal-to-distortion ratio in dB with energies summed jointly over channels.

    Returns None (the skip-marker) when the reference is essentially silent.
    """
    reference.require_same_shape(estimate, "sdr inputs")
    if kernels.mean_sq(reference.samples) < SILENT_THRESHOLD:
        return None
    sig, err = kernels.energy_pair(reference.samples, estimate.samples)
    return _ratio_db(sig, err)


def _channel_chunk_sdr(ref_row: np.ndarray, est_row: np.ndarray) -> MetricScore | None:
    ref2d = ref_row.reshape(1, -1)
    if kernels.mean_sq(ref2d) < SILENT_THRESHOLD:
        return None
    sig, err = kernels.energy_pair(ref2d, est_row.reshape(1, -1))
    return _ratio_db(sig, err)


def usdr(per_song_sdrs) -> float:
    """Utterance-level SDR: the arithmetic mean of per-song SDR values."""
    values = list(per_song_sdrs)
    if not values:
        raise MetricError("usdr needs at least one per-song SDR value")
    return float(np.mean(values))


def song_chunk_sdrs(
    reference: AudioBuffer, estimate: AudioBuffer, chunk_seconds: float = 1.0
) -> list[float]:
    """Joint-channel SDR of each non-overlapping chunk; silent chunks omitted.

    The final partial chunk is dropped. Used by csdr; exposed so fixtures
    can check their calibrated per-chunk targets.
    """
    reference.require_same_shape(estimate, "chunk SDR inputs")
    chunk_len = int(round(chunk_seconds * reference.sample_rate))
    if chunk_len < 1:
        raise MetricError(f"chunk_seconds {chunk_seconds} is below one sample")
    values = []
    for start in range(0, reference.num_samples - chunk_len + 1, chunk_len):
        ref = reference.samples[:, start : start + chunk_len]
        est = estimate.samples[:, start : start + chunk_len]
        if kernels.mean_sq(ref) < SILENT_THRESHOLD:
            continue
        sig, err = kernels.energy_pair(ref, est)
        values.append(_ratio_db(sig, err).value)
    return values


def csdr(songs, chunk_seconds: float = 1.0) -> float:
    """Chunk-level SDR: median over songs of per-song medians of chunk SDRs.

    Songs whose every chunk is silent (or that are shorter than one chunk)
    are excluded with a warning; an empty survivor set is an error.
    """
    per_song = []
    for i, (reference, estimate) in enumerate(songs):
        chunk_values = song_chunk_sdrs(reference, estimate, chunk_seconds)
        if not chunk_values:
            warnings.warn(f"csdr: song {i} has no valid chunks and was excluded")
            continue
        per_song.append(float(np.median(chunk_values)))
    if not per_song:
        raise MetricError("csdr: every song was excluded (no valid chunks)")
    return float(np.median(per_song))


def search_chunk_starts(num_samples: int, sample_rate: int, chunk_seconds: float = 6.0) -> list[tuple[int, int]]:
    """(start, stop) windows for the search-SDR chunking: 6 s, 50% overlap.

    A signal shorter than one chunk yields a single whole-signal window;
    otherwise trailing partial windows are dropped.
    """
    chunk_len = int(round(chunk_seconds * sample_rate))
    if num_samples < chunk_len:
        return [(0, num_samples)] if num_samples > 0 else []
    hop = chunk_len // 2
    return [(s, s + chunk_len) for s in range(0, num_samples - chunk_len + 1, hop)]


def search_sdr(reference: AudioBuffer, estimate: AudioBuffer) -> MetricScore | None:
    """Search-time SDR surrogate: per-channel SDR over 6 s chunks with 50% overlap, averaged."""
    reference.require_same_shape(estimate, "search_sdr inputs")
    windows = search_chunk_starts(reference.num_samples, reference.sample_rate)
    values = []
    capped = False
    for c in range(reference.channels):
        for start, stop in windows:
            score = _channel_chunk_sdr(
                reference.samples[c, start:stop], estimate.samples[c, start:stop]
            )
            if score is None:
                continue
            values.append(score.value)
            capped = capped or score.capped
    if not values:
        return None
    return MetricScore(float(np.mean(values)), capped)


def neg_mse(reference: AudioBuffer, estimate: AudioBuffer) -> MetricScore:
    """Negative mean squared error; 0 is perfect, raw units (not dB)."""
    reference.require_same_shape(estimate, "neg_mse inputs")
    return MetricScore(-kernels.mean_sq_diff(reference.samples, estimate.samples))


# ---------------------------------------------------------------------------
# dispatch

class _ExternalMetricPool:
    """One persistent child per distinct command; exchanges are lock-serialized."""

    def __init__(self):
        self._children: dict[tuple[str, ...], wire.ChildProcess] = {}
        self._lock = threading.Lock()

    def _child(self, command: tuple[str, ...]) -> wire.ChildProcess:
        with self._lock:
            child = self._children.get(command)
            if child is None or not child.alive:
                child = wire.ChildProcess(list(command))
                self._children[command] = child
            return child

    def score(self, command, reference, estimate: AudioBuffer, timeout: float = 120.0) -> float:
        child = self._child(tuple(command))
        ref_arr = reference.samples if reference is not None else None
        return wire.metric_request(child, ref_arr, estimate.samples, estimate.sample_rate, timeout)

    def close(self):
        with self._lock:
            for child in self._children.values():
                child.close()
            self._children.clear()


_external_pool = _ExternalMetricPool()
atexit.register(_external_pool.close)


def metric_eval(kind: MetricKind, problem: "MixtureProblem", estimate: AudioBuffer) -> MetricScore:
    """Evaluate one metric against a problem's reference; pure for built-in kinds."""
    if kind.name == "external":
        value = _external_pool.score(kind.command, problem.reference, estimate)
        return MetricScore(float(value))

    if kind.name not in BUILTIN_METRICS:
        raise MetricError(f"unknown metric kind {kind.name!r}")
    if problem.reference is None:
        raise MissingReferenceError(f"metric {kind.name} needs problem.reference")
    reference = problem.reference

    if kind.name == "si_snr":
        return si_snr(reference, estimate)
    if kind.name == "neg_mse":
        return neg_mse(reference, estimate)
    if kind.name == "csdr_component":
        return MetricScore(csdr([(reference, estimate)]))
    if kind.name in ("sdr", "usdr_component"):
        score = sdr(reference, estimate)
    else:  # search_sdr
        score = search_sdr(reference, estimate)
    if score is None:
        raise SilentReferenceError(f"metric {kind.name}: reference is silent")
    return score
