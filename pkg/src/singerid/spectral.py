"""Short-time Fourier analysis/synthesis and power spectra."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .audio_io import AudioClip
from .exceptions import SignalTooShortError

__all__ = ["Spectrogram", "hann", "stft", "istft", "power_spectrum"]


def hann(n: int) -> np.ndarray:
    """Periodic Hann window (COLA at hop n/2 and n/4)."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


_WINDOWS = {"hann": hann}


@dataclass(frozen=True)
class Spectrogram:
    """One-sided complex STFT plus everything needed to invert it.

    ``bins`` has shape (window_len // 2 + 1, n_frames). ``pad_left`` and
    ``length`` locate the original samples inside the padded frame grid.
    """

    bins: np.ndarray
    window_len: int
    hop: int
    sample_rate: int
    length: int
    pad_left: int
    window: str = "hann"
    label: str | None = None

    @property
    def n_frames(self) -> int:
        return self.bins.shape[1]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.bins)

    def with_bins(self, bins) -> "Spectrogram":
        bins = np.asarray(bins)
        if bins.shape != self.bins.shape:
            raise ValueError(f"bins shape {bins.shape} != {self.bins.shape}")
        return Spectrogram(bins, self.window_len, self.hop, self.sample_rate,
                           self.length, self.pad_left, self.window, self.label)


def _check_params(window_len, hop):
    if window_len < 2 or window_len & (window_len - 1):
        raise ValueError(f"window_len must be a power of two >= 2, got {window_len}")
    if not 0 < hop <= window_len:
        raise ValueError(f"hop must satisfy 0 < hop <= window_len, got hop={hop}")


def stft(clip: AudioClip, window_len: int = 1024, hop: int = 256, window: str = "hann") -> Spectrogram:
    """Hann-windowed one-sided STFT with reflect padding at both ends.

    Half a window is reflected onto the left edge and enough onto the right
    edge that the last frame ends exactly at the padded boundary, so every
    input sample falls under a full stack of overlapping frames.
    """
    _check_params(window_len, hop)
    x = clip.samples
    n = x.shape[0]
    pad_left = window_len // 2
    if n <= pad_left:
        raise SignalTooShortError(
            f"signal of {n} samples is too short for window_len={window_len}"
        )
    pad_right = window_len // 2
    pad_right += (-(n + pad_left + pad_right - window_len)) % hop
    padded = np.pad(x, (pad_left, pad_right), mode="reflect")
    frames = sliding_window_view(padded, window_len)[::hop]
    w = _WINDOWS[window](window_len)
    bins = np.fft.rfft(frames * w, axis=1).T
    return Spectrogram(bins, window_len, hop, clip.sample_rate, n, pad_left, window, clip.label)


def istft(spec: Spectrogram) -> AudioClip:
    """Weighted overlap-add inverse of :func:`stft`.

    Frames are synthesis-windowed and the sum is divided by the accumulated
    squared window, so ``istft(stft(x))`` returns ``x`` for any hop that
    keeps the squared-window sum nonzero.
    """
    _check_params(spec.window_len, spec.hop)
    if spec.bins.shape[0] != spec.window_len // 2 + 1:
        raise ValueError("bins row count inconsistent with window_len")
    win, hop = spec.window_len, spec.hop
    w = _WINDOWS[spec.window](win)
    frames = np.fft.irfft(spec.bins.T, n=win, axis=1) * w
    n_frames = frames.shape[0]
    total = win + hop * (n_frames - 1)
    out = np.zeros(total)
    norm = np.zeros(total)
    w2 = w * w
    for i in range(n_frames):
        out[i * hop:i * hop + win] += frames[i]
        norm[i * hop:i * hop + win] += w2
    out = out[spec.pad_left:spec.pad_left + spec.length]
    norm = norm[spec.pad_left:spec.pad_left + spec.length]
    nz = norm > 1e-12
    out[nz] /= norm[nz]
    return AudioClip(out, spec.sample_rate, spec.label)


def power_spectrum(signal) -> np.ndarray:
    """One-sided periodogram ``|FFT|**2 / N`` of length ``N // 2 + 1``."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        raise ValueError("power_spectrum of an empty signal")
    return np.abs(np.fft.rfft(x)) ** 2 / x.size
