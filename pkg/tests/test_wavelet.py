import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singerid._daubechies import SUPPORTED, filter_bank
from singerid.wavelet import (
    WaveletDenoiser,
    WaveletSpec,
    denoise,
    dwt_level,
    estimate_noise_sigma,
    threshold,
    universal_threshold,
    wavedec,
    waverec,
    write_bands_csv,
)

pywt = pytest.importorskip("pywt")

PERIODIC = WaveletSpec(extension="periodization")


@pytest.mark.parametrize("name", SUPPORTED)
def test_filters_match_reference(name):
    ref = pywt.Wavelet(name)
    ours = filter_bank(name)
    for a, b in zip(ours, (ref.dec_lo, ref.dec_hi, ref.rec_lo, ref.rec_hi)):
        np.testing.assert_allclose(a, b, atol=1e-15, rtol=0)


def test_db4_filter_properties():
    lo = filter_bank("db4")[0]
    assert lo.size == 8
    assert np.isclose(lo.sum(), np.sqrt(2), atol=1e-15)
    assert np.isclose(lo @ lo, 1.0, atol=1e-15)


def test_periodized_single_level_matches_reference(rng):
    x = rng.standard_normal(256)
    a, d = dwt_level(x, PERIODIC)
    ra, rd = pywt.dwt(x, "db4", mode="periodization")
    np.testing.assert_allclose(a, ra, atol=1e-12)
    np.testing.assert_allclose(d, rd, atol=1e-12)


def test_dwt_level_examples(rng):
    a, d = dwt_level(np.full(64, 3.0))
    assert np.max(np.abs(d)) < 1e-10
    a, d = dwt_level(np.zeros(64))
    assert not a.any() and not d.any()
    a, d = dwt_level(rng.standard_normal(64))
    assert a.size == 36 and d.size == 36


def test_dwt_level_too_short():
    with pytest.raises(ValueError):
        dwt_level(np.ones(5))


def test_wavedec_bands_and_ranges(rng):
    dec = wavedec(rng.standard_normal(4160), sample_rate=4160)
    assert dec.band_names == ["L4", "H4", "H3", "H2", "H1"]
    assert len(dec.details) == 4
    assert dec.nominal_ranges() == {
        "L4": (0.0, 260.0), "H4": (260.0, 520.0), "H3": (520.0, 1040.0),
        "H2": (1040.0, 2080.0), "H1": (2080.0, 4160.0),
    }


def test_wavedec_constant():
    x = np.full(1024, 2.0)
    dec = wavedec(x)
    for d in dec.details:
        assert np.max(np.abs(d)) < 1e-10
    assert np.linalg.norm(dec.approx) > 0


def test_wavedec_error_names_level():
    with pytest.raises(ValueError, match="level 4"):
        wavedec(np.ones(40), WaveletSpec(levels=4, extension="periodization"))
    with pytest.raises(ValueError, match="level 1"):
        wavedec(np.ones(7))


@pytest.mark.parametrize("name", SUPPORTED)
@pytest.mark.parametrize("n", [64, 100, 333, 1024])
@pytest.mark.parametrize("ext", ["symmetric", "periodization"])
def test_perfect_reconstruction(rng, name, n, ext):
    spec = WaveletSpec(family=name, levels=3, extension=ext)
    x = rng.standard_normal(n)
    y = waverec(wavedec(x, spec))
    assert y.size == n
    assert np.max(np.abs(x - y)) < 1e-10


def test_zero_bands_reconstruct_zero(rng):
    dec = wavedec(rng.standard_normal(512))
    dec.approx[:] = 0
    for d in dec.details:
        d[:] = 0
    assert not np.any(waverec(dec))


def test_cubic_annihilation():
    t = np.linspace(-1, 1, 512)
    x = 0.3 * t ** 3 - t ** 2 + 2 * t + 5
    a, d = dwt_level(x)
    assert np.max(np.abs(d[4:-4])) < 1e-8


@pytest.mark.parametrize("n", [256, 1024, 4160])
def test_parseval_periodized(rng, n):
    x = rng.standard_normal(n)
    dec = wavedec(x, PERIODIC)
    e = sum(float(b @ b) for b in dec.bands)
    assert abs(e - x @ x) / (x @ x) < 1e-8


def test_zeroing_h1_removes_high_sine():
    fs = 4160
    t = np.arange(fs) / fs
    x = np.sin(2 * np.pi * 2400 * t)
    dec = wavedec(x, sample_rate=fs)
    dec.details[-1][:] = 0
    y = waverec(dec)
    assert (y @ y) < 0.05 * (x @ x)


def test_noise_sigma_examples(rng):
    assert estimate_noise_sigma(np.zeros(10)) == 0.0
    assert np.isclose(estimate_noise_sigma([-1, 1, -1, 1]), 1 / 0.6745)
    assert np.isclose(estimate_noise_sigma([-1, 1, -1, 1]), 1.4826, atol=1e-4)
    s = estimate_noise_sigma(0.1 * rng.standard_normal(100_000))
    assert 0.095 <= s <= 0.105


def test_universal_threshold_examples():
    assert universal_threshold(0.0, 100, 1.0) == 0.0
    assert np.isclose(universal_threshold(2.0, 100, 1.0), 6.0697, atol=1e-4)
    assert np.isclose(universal_threshold(2.0, 100, 0.25), universal_threshold(2.0, 100, 0.5) / 2)
    with pytest.raises(ValueError):
        universal_threshold(1.0, 1, 0.5)
    with pytest.raises(ValueError):
        universal_threshold(1.0, 10, 1.5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=50), st.floats(0, 50))
def test_soft_threshold_non_expansive(vals, lam):
    b = np.array(vals)
    assert np.linalg.norm(threshold(b, lam, "soft")) <= np.linalg.norm(b) + 1e-12


def test_larger_k_never_increases_l1(rng):
    x = np.sin(np.linspace(0, 40, 2048)) + 0.3 * rng.standard_normal(2048)
    dec = wavedec(x)
    sigma = estimate_noise_sigma(dec.details[-1])
    for band in dec.details:
        norms = [np.abs(threshold(band, universal_threshold(sigma, x.size, k), m)).sum()
                 for k in np.arange(0.1, 1.01, 0.1) for m in ["soft"]]
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_denoise_examples(rng):
    c = np.full(777, -1.5)
    np.testing.assert_allclose(denoise(c, k=0.3), c, atol=1e-10)
    x = rng.standard_normal(600)
    np.testing.assert_allclose(denoise(x, k=0.0), x, atol=1e-10)
    assert denoise(x, mode="hard").size == 600


def test_denoise_reduces_noise(rng):
    fs = 4160
    t = np.arange(4 * fs) / fs
    clean = np.sin(2 * np.pi * 60 * t)
    noisy = clean + 0.3 * rng.standard_normal(t.size)
    out = denoise(noisy, k=0.5)
    assert np.linalg.norm(out - clean) < np.linalg.norm(noisy - clean)


def test_bands_csv(tmp_path, rng):
    dec = wavedec(rng.standard_normal(300))
    p = write_bands_csv(dec, tmp_path / "bands.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "band,index,coefficient"
    assert len(lines) - 1 == sum(b.size for b in dec.bands)


def test_denoiser_transformer(rng):
    X = rng.standard_normal((3, 256))
    out = WaveletDenoiser(k=0.0).fit_transform(X)
    np.testing.assert_allclose(out, X, atol=1e-10)
