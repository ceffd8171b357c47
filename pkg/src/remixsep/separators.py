"""One-step separation models: oracle, DSP, analytic, and subprocess-bridged.

Every model maps an AudioBuffer to a same-shape AudioBuffer and declares
whether concurrent calls are safe (subprocess models are serialized).
The contraction model is the analytic workhorse: its Lipschitz constant
is exactly alpha, which the theory checks rely on.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from . import wire
from .audio import AudioBuffer, Spectrogram, istft, stft


class ModelContractError(ValueError):
    """A model broke its contract (wrong output shape, bad input)."""


class SeparationModel(ABC):
    """A one-step separator f(mixture) -> estimate, same shape as the input."""

    name: str = "model"
    parallel_safe: bool = True

    @abstractmethod
    def _separate(self, mixture: AudioBuffer) -> AudioBuffer: ...

    def __call__(self, mixture: AudioBuffer) -> AudioBuffer:
        out = self._separate(mixture)
        if not out.same_shape(mixture):
            raise ModelContractError(
                f"{self.name}: output shape {out.samples.shape}@{out.sample_rate}Hz "
                f"!= input {mixture.samples.shape}@{mixture.sample_rate}Hz"
            )
        return out

    def describe(self) -> dict:
        return {"name": self.name, "params": self._params()}

    def _params(self) -> dict:
        return {}

    def close(self):
        pass


class IdentityModel(SeparationModel):
    name = "identity"

    def _separate(self, mixture: AudioBuffer) -> AudioBuffer:
        return mixture


@dataclass(frozen=True)
class ContractionModelParams:
    """Fixed point target and contraction factor; Lipschitz constant is exactly alpha."""

    target: AudioBuffer
    alpha: float

    def __post_init__(self):
        # The invariant is 0 < alpha < 1; alpha = 0 is additionally allowed
        # because f then collapses to the constant map onto the target.
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError(f"alpha must satisfy 0 <= alpha < 1, got {self.alpha}")


class ContractionModel(SeparationModel):
    name = "contraction"

    def __init__(self, params: ContractionModelParams):
        self.params = params

    def _separate(self, mixture: AudioBuffer) -> AudioBuffer:
        target = self.params.target
        mixture.require_same_shape(target, "contraction input vs target")
        out = target.samples + self.params.alpha * (mixture.samples - target.samples)
        return AudioBuffer._from_owned(out, mixture.sample_rate)

    def _params(self) -> dict:
        return {"alpha": self.params.alpha, "target_shape": list(self.params.target.samples.shape)}


@dataclass(frozen=True)
class NoiseProfile:
    """Per-bin mean noise magnitude, shape (channels, frame_size//2+1)."""

    magnitudes: np.ndarray
    frame_size: int
    hop_size: int
    window: str


def estimate_noise_profile(
    noise: AudioBuffer, frame_size: int = 1024, hop_size: int = 512, window: str = "hann"
) -> NoiseProfile:
    """Per-bin RMS STFT magnitude of a noise-only excerpt."""
    padded = _pad_to_frame_grid(noise, frame_size, hop_size)
    spec = stft(padded, frame_size, hop_size, window)
    mags = np.sqrt((np.abs(spec.frames) ** 2).mean(axis=1))
    return NoiseProfile(mags, frame_size, hop_size, window)


def _pad_to_frame_grid(buffer: AudioBuffer, frame_size: int, hop_size: int) -> AudioBuffer:
    n = buffer.num_samples
    if n <= frame_size:
        target = frame_size
    else:
        hops = -(-(n - frame_size) // hop_size)
        target = frame_size + hops * hop_size
    if target == n:
        return buffer
    padded = np.zeros((buffer.channels, target))
    padded[:, :n] = buffer.samples
    return AudioBuffer._from_owned(padded, buffer.sample_rate)


def _pad_for_masking(buffer: AudioBuffer, frame_size: int, hop_size: int) -> AudioBuffer:
    # One frame of zeros on each side keeps the ill-conditioned window
    # edges (where overlap-add coverage vanishes) out of the signal region.
    n = buffer.num_samples
    padded = np.zeros((buffer.channels, n + 2 * frame_size))
    padded[:, frame_size : frame_size + n] = buffer.samples
    return AudioBuffer._from_owned(padded, buffer.sample_rate)


class SpectralGateModel(SeparationModel):
    """Magnitude-domain spectral subtraction: gain = max(0, 1 - beta*N/|X|).

    With no profile supplied, the noise floor is re-estimated per call from
    the lowest-energy 20% of the input's own frames (still deterministic).
    """

    name = "spectral_gate"

    def __init__(
        self,
        noise_profile: NoiseProfile | None = None,
        over_subtraction: float = 1.0,
        frame_size: int = 1024,
        hop_size: int = 512,
        window: str = "hann",
    ):
        if over_subtraction < 1.0:
            raise ValueError(f"over_subtraction must be >= 1, got {over_subtraction}")
        self.noise_profile = noise_profile
        self.over_subtraction = float(over_subtraction)
        if noise_profile is not None:
            self.frame_size = noise_profile.frame_size
            self.hop_size = noise_profile.hop_size
            self.window = noise_profile.window
        else:
            self.frame_size = frame_size
            self.hop_size = hop_size
            self.window = window

    def _separate(self, mixture: AudioBuffer) -> AudioBuffer:
        n = mixture.num_samples
        if n == 0:
            return mixture
        padded = _pad_for_masking(mixture, self.frame_size, self.hop_size)
        spec = stft(padded, self.frame_size, self.hop_size, self.window)
        mags = np.abs(spec.frames)

        if self.noise_profile is not None:
            noise_mag = self.noise_profile.magnitudes
            if noise_mag.shape[0] != mixture.channels:
                raise ModelContractError(
                    f"noise profile has {noise_mag.shape[0]} channels, input has {mixture.channels}"
                )
        else:
            frame_energy = (mags**2).sum(axis=2)
            keep = max(1, int(0.2 * spec.num_frames))
            idx = np.argsort(frame_energy, axis=1)[:, :keep]
            noise_mag = np.stack(
                [np.sqrt((mags[c, idx[c]] ** 2).mean(axis=0)) for c in range(mixture.channels)]
            )

        gain = 1.0 - self.over_subtraction * noise_mag[:, None, :] / np.maximum(mags, 1e-12)
        np.maximum(gain, 0.0, out=gain)
        masked = Spectrogram(
            spec.frames * gain, self.frame_size, self.hop_size, self.window, spec.sample_rate
        )
        out = istft(masked)
        region = out.samples[:, self.frame_size : self.frame_size + n]
        return AudioBuffer._from_owned(region.copy(), mixture.sample_rate)

    def _params(self) -> dict:
        return {
            "over_subtraction": self.over_subtraction,
            "frame_size": self.frame_size,
            "hop_size": self.hop_size,
            "window": self.window,
            "profile": "fixed" if self.noise_profile is not None else "input_adaptive",
        }


class OracleIrmModel(SeparationModel):
    """Ideal-ratio-mask separator: mask = |P| / (|P| + |X-P| + delta)."""

    name = "oracle_irm"

    def __init__(
        self,
        reference: AudioBuffer,
        frame_size: int = 1024,
        hop_size: int = 512,
        window: str = "hann",
        delta: float = 1e-10,
    ):
        self.reference = reference
        self.frame_size = frame_size
        self.hop_size = hop_size
        self.window = window
        self.delta = delta

    def _separate(self, mixture: AudioBuffer) -> AudioBuffer:
        mixture.require_same_shape(self.reference, "oracle IRM input vs reference")
        n = mixture.num_samples
        if n == 0:
            return mixture
        padded_x = _pad_for_masking(mixture, self.frame_size, self.hop_size)
        padded_p = _pad_for_masking(self.reference, self.frame_size, self.hop_size)
        spec_x = stft(padded_x, self.frame_size, self.hop_size, self.window)
        spec_p = stft(padded_p, self.frame_size, self.hop_size, self.window)
        mag_p = np.abs(spec_p.frames)
        mag_res = np.abs(spec_x.frames - spec_p.frames)
        mask = mag_p / (mag_p + mag_res + self.delta)
        masked = Spectrogram(
            spec_x.frames * mask, self.frame_size, self.hop_size, self.window, spec_x.sample_rate
        )
        out = istft(masked)
        region = out.samples[:, self.frame_size : self.frame_size + n]
        return AudioBuffer._from_owned(region.copy(), mixture.sample_rate)

    def _params(self) -> dict:
        return {"frame_size": self.frame_size, "hop_size": self.hop_size, "delta": self.delta}


class ExternalModel(SeparationModel):
    """Bridges a child process implementing the model wire contract.

    The child is spawned lazily, persists across calls, and handles one
    request at a time; distinct errors surface crashes, malformed replies,
    and timeouts.
    """

    name = "external"
    parallel_safe = False

    def __init__(self, command, timeout: float = 120.0, env: dict | None = None):
        self.command = command
        self.timeout = timeout
        self.env = env
        self._child: wire.ChildProcess | None = None
        self._spawn_lock = threading.Lock()

    def _ensure_child(self) -> wire.ChildProcess:
        with self._spawn_lock:
            if self._child is None or not self._child.alive:
                self._child = wire.ChildProcess(self.command, env=self.env)
            return self._child

    def _separate(self, mixture: AudioBuffer) -> AudioBuffer:
        child = self._ensure_child()
        out = wire.model_request(child, mixture.samples, mixture.sample_rate, self.timeout)
        return AudioBuffer._from_owned(out, mixture.sample_rate)

    def _params(self) -> dict:
        command = self.command if isinstance(self.command, str) else " ".join(self.command)
        return {"command": command, "timeout": self.timeout}

    def close(self):
        if self._child is not None:
            self._child.close()
            self._child = None


# Factory surface; the engine and CLI construct models through these.

def identity_model() -> SeparationModel:
    return IdentityModel()


def contraction_model(params: ContractionModelParams) -> SeparationModel:
    return ContractionModel(params)


def spectral_gate_model(
    noise_profile: NoiseProfile | None = None, over_subtraction: float = 1.0, **stft_kwargs
) -> SeparationModel:
    return SpectralGateModel(noise_profile, over_subtraction, **stft_kwargs)


def oracle_irm_model(reference: AudioBuffer, **stft_kwargs) -> SeparationModel:
    return OracleIrmModel(reference, **stft_kwargs)


def external_model(command, timeout: float = 120.0, env: dict | None = None) -> SeparationModel:
    return ExternalModel(command, timeout=timeout, env=env)
