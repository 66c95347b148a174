"""WAV loading, resampling and segmentation of mono clips."""
from __future__ import annotations

import wave
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal as sps
from scipy.io import wavfile

from .exceptions import AudioReadError, EmptyAudioError, UnsupportedEncodingError

__all__ = ["AudioClip", "load_audio", "write_audio", "resample", "segment", "concatenate"]


@dataclass(frozen=True)
class AudioClip:
    """Mono sample buffer with its sample rate and an optional singer label."""

    samples: np.ndarray
    sample_rate: int
    label: str | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples) -> "AudioClip":
        return replace(self, samples=samples)


def _peak_normalize(x):
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak == 0.0:
        return x
    return x / peak


def load_audio(path, label=None, normalize=True) -> AudioClip:
    """Read a PCM16 or float32 WAV file into a mono, peak-normalized clip.

    Stereo (or any multichannel) input is mixed down by averaging channels.
    An all-zero file is returned as zeros without normalization.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError as exc:
        raise AudioReadError(f"{path}: no such file") from exc
    except (ValueError, OSError, EOFError, wave.Error) as exc:
        raise AudioReadError(f"{path}: not a readable WAV file ({exc})") from exc

    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        x = data.astype(np.float64)
    else:
        raise UnsupportedEncodingError(
            f"{path}: unsupported sample format {data.dtype}; expected PCM16 or float32"
        )
    if x.shape[0] == 0:
        raise EmptyAudioError(f"{path}: zero-length audio")
    if x.ndim == 2:
        x = x.mean(axis=1)
    if normalize:
        x = _peak_normalize(x)
    return AudioClip(x, rate, label)


def write_audio(path, clip: AudioClip, encoding="float32") -> Path:
    """Write a clip as a mono WAV file (``float32`` or ``pcm16``)."""
    path = Path(path)
    if encoding == "float32":
        data = clip.samples.astype(np.float32)
    elif encoding == "pcm16":
        data = np.clip(np.round(clip.samples * 32767.0), -32768, 32767).astype(np.int16)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, clip.sample_rate, data)
    return path


def _lowpass_kernel(up, down, half_zeros=32, beta=10.0):
    # Kaiser-windowed sinc; cutoff at the narrower Nyquist of the two rates.
    max_rate = max(up, down)
    n_taps = 2 * half_zeros * max_rate + 1
    h = sps.firwin(n_taps, 1.0 / max_rate, window=("kaiser", beta))
    return h * up


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited (windowed-sinc polyphase) resampling to ``target_rate``.

    The output length is ``round(len(clip) * target_rate / sample_rate)``.
    """
    target_rate = int(target_rate)
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return clip
    ratio = Fraction(target_rate, clip.sample_rate)
    up, down = ratio.numerator, ratio.denominator
    y = sps.resample_poly(clip.samples, up, down, window=_lowpass_kernel(up, down))
    n_out = int(round(len(clip) * target_rate / clip.sample_rate))
    if y.shape[0] >= n_out:
        y = y[:n_out]
    else:
        y = np.pad(y, (0, n_out - y.shape[0]))
    return AudioClip(y, target_rate, clip.label)


def segment(clip: AudioClip, duration_s: float) -> list[AudioClip]:
    """Cut a clip into consecutive non-overlapping segments of ``duration_s``.

    The trailing remainder is dropped; a clip shorter than one segment
    yields an empty list.
    """
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    seg_len = int(round(duration_s * clip.sample_rate))
    n_seg = len(clip) // seg_len
    return [
        AudioClip(clip.samples[i * seg_len:(i + 1) * seg_len].copy(), clip.sample_rate, clip.label)
        for i in range(n_seg)
    ]


def concatenate(clips) -> AudioClip:
    clips = list(clips)
    if not clips:
        raise ValueError("nothing to concatenate")
    rates = {c.sample_rate for c in clips}
    if len(rates) != 1:
        raise ValueError(f"mixed sample rates {sorted(rates)}")
    return AudioClip(np.concatenate([c.samples for c in clips]), rates.pop(), clips[0].label)
