"""Built-in transforms: identity, gain, and a spectral soft-threshold denoiser."""

from __future__ import annotations

import numpy as np

_FRAME = 1024
_HOP = 512


def identity_transform():
    return lambda audio: audio


def gain_transform(gain: float):
    gain = float(gain)
    return lambda audio: gain * audio


def _hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def denoise_transform(strength: float):
    """Magnitude-domain soft-thresholding denoiser.

    The threshold is ``strength`` times the median STFT magnitude of the
    channel (the classic universal-threshold idea): broadband noise sits
    near the median and is attenuated, while concentrated spectral peaks
    pass nearly untouched. strength=0 is the exact identity.
    """
    strength = float(strength)
    if not 0.0 <= strength <= 1.0:
        raise ValueError(f"strength must be in [0, 1], got {strength}")

    if strength == 0.0:
        return identity_transform()

    window = _hann(_FRAME)

    def transform(audio: np.ndarray) -> np.ndarray:
        channels, n = audio.shape
        if n == 0:
            return audio
        # one frame of zero padding per side keeps the ill-conditioned
        # window edges outside the signal region
        hops = max(1, -(-(n + _FRAME) // _HOP))
        padded_len = 2 * _FRAME + hops * _HOP
        padded = np.zeros((channels, padded_len))
        padded[:, _FRAME : _FRAME + n] = audio

        segments = (
            np.lib.stride_tricks.sliding_window_view(padded, _FRAME, axis=1)[:, ::_HOP]
            * window
        )
        spectra = np.fft.rfft(segments, axis=2)
        mags = np.abs(spectra)

        threshold = strength * np.median(mags, axis=(1, 2))[:, None, None]
        new_mags = np.maximum(mags - threshold, 0.0)
        spectra *= new_mags / np.maximum(mags, 1e-12)

        frames_time = np.fft.irfft(spectra, n=_FRAME, axis=2)
        out = np.zeros((channels, padded_len))
        norm = np.zeros(padded_len)
        for m in range(frames_time.shape[1]):
            start = m * _HOP
            out[:, start : start + _FRAME] += frames_time[:, m] * window
            norm[start : start + _FRAME] += window**2
        covered = norm > 1e-8
        out[:, covered] /= norm[covered]
        out[:, ~covered] = 0.0
        return out[:, _FRAME : _FRAME + n]

    return transform


def build_transform(name: str, gain: float = 0.5, strength: float = 0.5):
    if name == "identity":
        return identity_transform()
    if name == "gain":
        return gain_transform(gain)
    if name == "denoise":
        return denoise_transform(strength)
    raise ValueError(f"unknown transform {name!r}")
