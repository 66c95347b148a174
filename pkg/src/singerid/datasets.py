"""Synthetic "singer" corpus for smoke tests and demos.

Each singer is a harmonic timbre (fixed per-harmonic amplitudes), a pitch
range and a vibrato rate. A clip is a phrase of sung notes separated by
short rests, mixed over an accompaniment of sustained organ chords shared
by every singer.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio_io import AudioClip, write_audio
from .pipeline import write_manifest

__all__ = ["SINGERS", "accompaniment", "sing", "make_singer_clip", "make_singer_corpus", "write_singer_corpus"]

# name: (harmonic amplitudes, (f0 low, f0 high) Hz, vibrato rate Hz)
SINGERS = {
    "alto": ((1.0, 0.8, 0.5, 0.3, 0.15, 0.08, 0.04, 0.02), (196.0, 392.0), 5.0),
    "bass": ((1.0, 0.9, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2), (98.0, 196.0), 4.5),
    "soprano": ((1.0, 0.3, 0.1, 0.05, 0.02, 0.01, 0.0, 0.0), (330.0, 660.0), 6.5),
    "tenor": ((0.6, 1.0, 0.4, 0.7, 0.2, 0.35, 0.1, 0.15), (147.0, 294.0), 5.8),
}

_CHORD_ROOTS = (110.0, 138.6, 164.8)


def accompaniment(n: int, sample_rate: int, rng=None) -> np.ndarray:
    """Sustained three-note organ chord with fixed harmonics (stationary)."""
    rng = np.random.default_rng(rng)
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    for root in _CHORD_ROOTS:
        for h, amp in enumerate((1.0, 0.5, 0.25, 0.12), start=1):
            f = root * h
            if f < sample_rate / 2:
                out += amp * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    return out / np.max(np.abs(out))


def sing(singer: str, n: int, sample_rate: int, rng=None) -> np.ndarray:
    """A phrase of notes with rests; each note has vibrato and an envelope."""
    rng = np.random.default_rng(rng)
    amps, (lo, hi), vib_rate = SINGERS[singer]
    out = np.zeros(n)
    pos = int(rng.uniform(0.0, 0.3) * sample_rate)
    while pos < n:
        dur = int(rng.uniform(0.25, 0.8) * sample_rate)
        end = min(pos + dur, n)
        m = end - pos
        t = np.arange(m) / sample_rate
        f0 = np.exp(rng.uniform(np.log(lo), np.log(hi)))
        vib = 1.0 + 0.02 * np.sin(2 * np.pi * vib_rate * t + rng.uniform(0, 2 * np.pi))
        phase = 2 * np.pi * np.cumsum(f0 * vib) / sample_rate
        note = np.zeros(m)
        for h, a in enumerate(amps, start=1):
            if a > 0 and h * f0 * 1.02 < sample_rate / 2:
                note += a * np.sin(h * phase)
        attack = min(m, int(0.03 * sample_rate))
        env = np.ones(m)
        env[:attack] = np.linspace(0.0, 1.0, attack)
        env *= np.exp(-1.5 * t)
        out[pos:end] += note * env * rng.uniform(0.7, 1.0)
        pos = end + int(rng.uniform(0.05, 0.3) * sample_rate)
    return out


def make_singer_clip(singer: str, duration: float = 12.0, sample_rate: int = 8320,
                     voice_to_music: float = 1.0, noise: float = 0.01, rng=None) -> AudioClip:
    rng = np.random.default_rng(rng)
    n = int(round(duration * sample_rate))
    voice = sing(singer, n, sample_rate, rng)
    voice /= max(np.max(np.abs(voice)), 1e-12)
    mix = voice_to_music * voice + accompaniment(n, sample_rate, rng) + noise * rng.standard_normal(n)
    return AudioClip(mix / np.max(np.abs(mix)), sample_rate, singer)


def make_singer_corpus(n_per_singer: int = 40, duration: float = 12.0, sample_rate: int = 8320,
                       seed: int = 0, **clip_kw):
    """Deterministic list of labelled clips, singers interleaved."""
    rng = np.random.default_rng(seed)
    return [
        make_singer_clip(s, duration, sample_rate, rng=rng, **clip_kw)
        for _ in range(n_per_singer)
        for s in SINGERS
    ]


def write_singer_corpus(directory, n_per_singer: int = 40, duration: float = 12.0,
                        sample_rate: int = 8320, seed: int = 0, **clip_kw) -> Path:
    """Write the corpus as float32 WAVs plus ``manifest.csv``; returns the manifest path."""
    directory = Path(directory)
    entries = []
    for i, clip in enumerate(make_singer_corpus(n_per_singer, duration, sample_rate, seed, **clip_kw)):
        path = write_audio(directory / "audio" / f"{i:04d}_{clip.label}.wav", clip)
        entries.append((path, clip.label))
    return write_manifest(directory / "manifest.csv", entries)
