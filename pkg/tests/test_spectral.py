import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singerid.audio_io import AudioClip
from singerid.spectral import hann, istft, power_spectrum, stft


def _clip(x, fs=8000):
    return AudioClip(np.asarray(x, dtype=float), fs)


def test_shape_and_frame_count(rng):
    spec = stft(_clip(rng.standard_normal(5000)), 256, 64)
    assert spec.bins.shape[0] == 129
    padded = 5000 + 2 * 128 + ((-(5000 + 256 - 256)) % 64)
    assert spec.n_frames == (padded - 256) // 64 + 1


def test_zero_in_zero_out():
    spec = stft(_clip(np.zeros(2048)), 512, 128)
    assert np.all(spec.bins == 0)
    assert np.all(istft(spec).samples == 0)


def test_bin_centred_sine_has_one_dominant_bin():
    n_win, fs, k = 1024, 8192, 37
    t = np.arange(4 * fs) / fs
    spec = stft(_clip(np.sin(2 * np.pi * k * fs / n_win * t), fs), n_win, 256)
    mag = spec.magnitude[:, 4:-4]
    assert np.all(np.argmax(mag, axis=0) == k)
    # periodic Hann spreads a bin-centred tone into k-1, k+1 at half height;
    # check against bins two or more away
    others = np.delete(mag, [k - 1, k, k + 1], axis=0).max(axis=0)
    assert np.all(mag[k] / others > 100)


def test_dc_energy_in_bin_zero():
    spec = stft(_clip(np.ones(4096)), 512, 128)
    mag = spec.magnitude
    assert np.all(np.argmax(mag, axis=0) == 0)
    assert np.all(mag[2:] < 1e-9 * mag[0])


def test_roundtrip_hann_quarter_hop(rng):
    x = rng.standard_normal(3 * 8000 + 17)
    y = istft(stft(_clip(x), 1024, 256)).samples
    assert y.shape == x.shape
    assert np.max(np.abs(y - x)) < 1e-10


def test_roundtrip_sine():
    t = np.arange(16000) / 8000
    x = np.sin(2 * np.pi * 100 * t)
    y = istft(stft(_clip(x), 1024, 256)).samples
    assert np.linalg.norm(y - x) / np.linalg.norm(x) < 1e-8


@settings(max_examples=25, deadline=None)
@given(n=st.integers(300, 3000), log_win=st.integers(5, 9), hop_div=st.sampled_from([2, 4, 8]))
def test_roundtrip_property(n, log_win, hop_div):
    win = 2 ** log_win
    if n <= win // 2:
        return
    x = np.random.default_rng(n).standard_normal(n)
    y = istft(stft(_clip(x), win, win // hop_div)).samples
    assert np.max(np.abs(y - x)) < 1e-10


def test_linearity(rng):
    x, y = rng.standard_normal(4000), rng.standard_normal(4000)
    a, b = 2.5, -0.7
    lhs = stft(_clip(a * x + b * y), 512, 128).bins
    rhs = a * stft(_clip(x), 512, 128).bins + b * stft(_clip(y), 512, 128).bins
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(lhs))


def test_parseval_per_frame(rng):
    x = rng.standard_normal(4000)
    n_win, hop = 512, 128
    spec = stft(_clip(x), n_win, hop)
    w = hann(n_win)
    padded = np.pad(x, (n_win // 2, n_win // 2 + ((-(4000 + n_win - n_win)) % hop)), mode="reflect")
    frames = np.lib.stride_tricks.sliding_window_view(padded, n_win)[::hop]
    time_energy = np.sum((frames * w) ** 2)
    weights = np.full(n_win // 2 + 1, 2.0)
    weights[[0, -1]] = 1.0
    spec_energy = np.sum(weights[:, None] * spec.magnitude ** 2) / n_win
    assert abs(spec_energy - time_energy) / time_energy < 1e-8


@pytest.mark.parametrize("bad", [(1000, 256), (512, 0), (512, 1024), (1, 1)])
def test_bad_parameters(bad):
    with pytest.raises(ValueError):
        stft(_clip(np.zeros(4096)), *bad)


def test_istft_rejects_hop_beyond_window(rng):
    spec = stft(_clip(rng.standard_normal(2048)), 256, 64)
    from dataclasses import replace
    with pytest.raises(ValueError):
        istft(replace(spec, hop=512))


def test_too_short_signal():
    with pytest.raises(ValueError):
        stft(_clip(np.zeros(100)), 1024, 256)


def test_power_spectrum_values(rng):
    assert np.all(power_spectrum(np.zeros(16)) == 0)
    np.testing.assert_allclose(power_spectrum(np.ones(8)), [8, 0, 0, 0, 0], atol=1e-12)
    n = 64
    x = np.sin(2 * np.pi * 5 * np.arange(n) / n)
    p = power_spectrum(x)
    assert np.argmax(p) == 5
    # Parseval: |X_0|^2 + 2 sum |X_k|^2 + |X_{N/2}|^2 = N * sum x^2, and p = |X|^2 / N
    one_sided = p[0] + 2 * p[1:-1].sum() + p[-1]
    assert abs(one_sided - np.sum(x ** 2)) < 1e-10
    assert power_spectrum(rng.standard_normal(9)).size == 5
    with pytest.raises(ValueError):
        power_spectrum([])
