"""Segment-level features: DWT sub-band statistics, an MFCC baseline,
raw samples, PCA reduction and the feature CSV format."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.fft import dct
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .audio_io import AudioClip
from .exceptions import SignalTooShortError
from .spectral import power_spectrum
from .wavelet import WaveletSpec, denoise, wavedec

__all__ = [
    "FeatureVector",
    "Dataset",
    "band_mean",
    "band_std",
    "band_entropy",
    "band_psd_summary",
    "dwt_feature_names",
    "extract_dwt_features",
    "extract_mfcc_features",
    "extract_raw_features",
    "mel_filterbank",
    "mfcc",
    "PcaModel",
    "pca_fit",
    "pca_transform",
    "pca_inverse_transform",
    "VariancePCA",
    "DwtFeatureExtractor",
    "MfccFeatureExtractor",
    "write_feature_csv",
    "read_feature_csv",
]


@dataclass
class FeatureVector:
    values: np.ndarray
    feature_names: list
    label: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.feature_names = list(self.feature_names)
        if self.values.shape != (len(self.feature_names),):
            raise ValueError(
                f"{self.values.shape[0]} values for {len(self.feature_names)} names"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature vector has non-finite values")


@dataclass
class Dataset:
    """Feature matrix with one singer label per row.

    ``class_names`` defaults to the sorted set of labels and fixes the class
    index order used for tie-breaking and confusion matrices.
    """

    X: np.ndarray
    labels: list
    feature_names: list
    class_names: list = field(default=None)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.labels = [str(lab) for lab in self.labels]
        self.feature_names = list(self.feature_names)
        if self.X.shape[0] != len(self.labels):
            raise ValueError(f"{self.X.shape[0]} rows but {len(self.labels)} labels")
        if self.X.shape[1] != len(self.feature_names):
            raise ValueError(f"{self.X.shape[1]} columns but {len(self.feature_names)} names")
        if self.class_names is None:
            self.class_names = sorted(set(self.labels))
        else:
            self.class_names = [str(c) for c in self.class_names]
            unknown = set(self.labels) - set(self.class_names)
            if unknown:
                raise ValueError(f"labels not in class_names: {sorted(unknown)}")

    @classmethod
    def from_vectors(cls, vectors, class_names=None):
        vectors = list(vectors)
        if not vectors:
            raise ValueError("no feature vectors")
        names = vectors[0].feature_names
        for v in vectors:
            if v.feature_names != names:
                raise ValueError("feature vectors disagree on feature names")
        return cls(np.vstack([v.values for v in vectors]), [v.label for v in vectors], names, class_names)

    def __len__(self):
        return self.X.shape[0]

    @property
    def y(self) -> np.ndarray:
        """Labels as integer indices into ``class_names``."""
        index = {c: i for i, c in enumerate(self.class_names)}
        return np.array([index[lab] for lab in self.labels], dtype=np.intp)

    def rows(self):
        for x, lab in zip(self.X, self.labels):
            yield FeatureVector(x, self.feature_names, lab)


# -- per-band statistics -----------------------------------------------------

def _band(band):
    b = np.asarray(band, dtype=np.float64).ravel()
    if b.size == 0:
        raise ValueError("empty band")
    return b


def band_mean(band) -> float:
    return float(np.mean(_band(band)))


def band_std(band) -> float:
    """Population standard deviation (divisor N)."""
    return float(np.std(_band(band)))


def band_entropy(band) -> float:
    """Shannon entropy ``-sum(x**2 * ln(x**2))`` of the unit-norm band.

    Zero coefficients contribute nothing; an all-zero band scores 0.
    """
    b = _band(band)
    norm = np.linalg.norm(b)
    if norm == 0.0:
        return 0.0
    p = (b / norm) ** 2
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def band_psd_summary(band) -> float:
    """Mean of the one-sided power spectrum of the band."""
    return float(np.mean(power_spectrum(_band(band))))


def dwt_feature_names(levels: int = 4) -> list:
    bands = [f"L{levels}"] + [f"H{j}" for j in range(levels, 0, -1)]
    names = [f"{b}_{stat}" for b in bands for stat in ("mean_abs", "std", "entropy")]
    return names + ["median", "std", "psd_mean"]


def _samples(segment):
    if isinstance(segment, AudioClip):
        return segment.samples, segment.label
    return np.asarray(segment, dtype=np.float64), None


def extract_dwt_features(segment, spec: WaveletSpec = WaveletSpec(), k: float = 0.3,
                         mode: str = "soft", apply_denoise: bool = True) -> FeatureVector:
    """Wavelet sub-band feature vector of a (voice) segment.

    The segment is denoised, decomposed, and summarised as, for each band
    ``L4, H4, H3, H2, H1``: mean absolute coefficient, standard deviation
    and spectral entropy; followed by the median, standard deviation and
    mean power spectral density of the denoised signal. With the default
    four levels that is 18 values, named by :func:`dwt_feature_names`.
    """
    x, label = _samples(segment)
    if apply_denoise:
        x = denoise(x, spec, k, mode)
    dec = wavedec(x, spec)
    values = []
    for band in dec.bands:
        values += [float(np.mean(np.abs(band))), band_std(band), band_entropy(band)]
    values += [float(np.median(x)), band_std(x), band_psd_summary(x)]
    return FeatureVector(np.array(values), dwt_feature_names(spec.levels), label)


# -- MFCC baseline ----------------------------------------------------------

def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int, n_fft: int, sample_rate: int, fmin=0.0, fmax=None) -> np.ndarray:
    """Triangular mel filters, shape (n_filters, n_fft // 2 + 1)."""
    fmax = sample_rate / 2.0 if fmax is None else fmax
    mel_points = np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_filters + 2)
    hz = _mel_to_hz(mel_points)
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    fb = np.zeros((n_filters, freqs.size))
    for i in range(n_filters):
        lo, mid, hi = hz[i], hz[i + 1], hz[i + 2]
        rising = (freqs - lo) / (mid - lo)
        falling = (hi - freqs) / (hi - mid)
        fb[i] = np.maximum(0.0, np.minimum(rising, falling))
    return fb


def mfcc(samples, sample_rate: int, n_coeffs=13, frame_s=0.025, hop_s=0.010,
         n_filters=26, preemphasis=0.97) -> np.ndarray:
    """Frame-wise MFCC matrix of shape (n_frames, n_coeffs)."""
    x = np.asarray(samples, dtype=np.float64)
    frame_len = int(round(frame_s * sample_rate))
    hop = int(round(hop_s * sample_rate))
    if x.size < frame_len:
        raise SignalTooShortError(f"{x.size} samples is shorter than one {frame_len}-sample frame")
    if n_coeffs > n_filters:
        raise ValueError(f"n_coeffs ({n_coeffs}) exceeds n_filters ({n_filters})")
    x = np.append(x[0], x[1:] - preemphasis * x[:-1])
    n_frames = 1 + (x.size - frame_len) // hop
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * np.hamming(frame_len)
    n_fft = 1 << (frame_len - 1).bit_length()
    pow_spec = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2 / n_fft
    energies = pow_spec @ mel_filterbank(n_filters, n_fft, sample_rate).T
    log_e = np.log(np.maximum(energies, np.finfo(np.float64).eps))
    return dct(log_e, type=2, axis=1, norm="ortho")[:, :n_coeffs]


def extract_mfcc_features(segment, n_coeffs: int = 13, sample_rate: int | None = None, **mfcc_kw) -> FeatureVector:
    """Per-coefficient mean then standard deviation of frame MFCCs (2*n_coeffs values)."""
    x, label = _samples(segment)
    if sample_rate is None:
        if not isinstance(segment, AudioClip):
            raise ValueError("sample_rate is required for bare arrays")
        sample_rate = segment.sample_rate
    m = mfcc(x, sample_rate, n_coeffs=n_coeffs, **mfcc_kw)
    names = [f"mfcc{i}_mean" for i in range(n_coeffs)] + [f"mfcc{i}_std" for i in range(n_coeffs)]
    return FeatureVector(np.concatenate([m.mean(axis=0), m.std(axis=0)]), names, label)


def extract_raw_features(segment) -> FeatureVector:
    x, label = _samples(segment)
    return FeatureVector(x.copy(), [f"s{i}" for i in range(x.size)], label)


# -- PCA ---------------------------------------------------------------------

@dataclass(frozen=True)
class PcaModel:
    """Fitted projection. ``components`` has orthonormal columns, one per
    retained direction; ``explained_variance_ratios`` covers every direction
    found, in descending order."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance_ratios: np.ndarray
    retained_count: int


def pca_fit(X, variance_retained: float = 0.9999) -> PcaModel:
    """Keep the fewest leading principal directions whose explained-variance
    ratios sum to at least ``variance_retained``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"pca_fit needs at least 2 rows, got shape {X.shape}")
    if not 0.0 < variance_retained <= 1.0:
        raise ValueError(f"variance_retained must lie in (0, 1], got {variance_retained}")
    mean = X.mean(axis=0)
    # SVD of the centred data = eigendecomposition of the covariance, and it
    # stays cheap when columns outnumber rows
    Xc = X - mean
    if Xc.shape[1] > Xc.shape[0]:
        # LAPACK is roughly twice as fast on the tall orientation
        u, s, _ = np.linalg.svd(Xc.T, full_matrices=False)
        vt = u.T
    else:
        _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    var = s ** 2 / (X.shape[0] - 1)
    total = var.sum()
    # deterministic sign: largest-magnitude loading positive
    signs = np.sign(vt[np.arange(vt.shape[0]), np.argmax(np.abs(vt), axis=1)])
    signs[signs == 0] = 1.0
    vt = vt * signs[:, None]
    if total == 0.0:
        return PcaModel(mean, vt[:1].T.copy(), np.zeros_like(var), 1)
    ratios = var / total
    cum = np.cumsum(ratios)
    count = int(np.searchsorted(cum, variance_retained - 1e-10) + 1)
    count = min(count, ratios.size)
    return PcaModel(mean, vt[:count].T.copy(), ratios, count)


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != model.mean.size:
        raise ValueError(f"expected {model.mean.size} features, got {X.shape[-1]}")
    return (X - model.mean) @ model.components


def pca_inverse_transform(model: PcaModel, Z) -> np.ndarray:
    return np.asarray(Z, dtype=np.float64) @ model.components.T + model.mean


class VariancePCA(TransformerMixin, BaseEstimator):
    """PCA keeping enough components to explain ``variance_retained`` of the variance."""

    def __init__(self, variance_retained=0.9999):
        self.variance_retained = variance_retained

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.model_ = pca_fit(X, self.variance_retained)
        self.n_features_in_ = X.shape[1]
        self.mean_ = self.model_.mean
        self.components_ = self.model_.components.T
        self.explained_variance_ratio_ = self.model_.explained_variance_ratios
        self.n_components_ = self.model_.retained_count
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return pca_transform(self.model_, check_array(X, dtype=np.float64))

    def inverse_transform(self, Z):
        check_is_fitted(self, "model_")
        return pca_inverse_transform(self.model_, Z)


# -- sklearn transformers over arrays of equal-length segments ---------------

class DwtFeatureExtractor(TransformerMixin, BaseEstimator):
    def __init__(self, family="db4", levels=4, extension="symmetric", k=0.3, mode="soft", apply_denoise=True):
        self.family = family
        self.levels = levels
        self.extension = extension
        self.k = k
        self.mode = mode
        self.apply_denoise = apply_denoise

    def fit(self, X, y=None):
        self.n_features_in_ = check_array(X).shape[1]
        return self

    def transform(self, X):
        X = check_array(X, dtype=np.float64)
        spec = WaveletSpec(self.family, self.levels, self.extension)
        return np.vstack([
            extract_dwt_features(row, spec, self.k, self.mode, self.apply_denoise).values for row in X
        ])

    def get_feature_names_out(self, input_features=None):
        return np.array(dwt_feature_names(self.levels), dtype=object)


class MfccFeatureExtractor(TransformerMixin, BaseEstimator):
    def __init__(self, sample_rate=4160, n_coeffs=13, frame_s=0.025, hop_s=0.010, n_filters=26, preemphasis=0.97):
        self.sample_rate = sample_rate
        self.n_coeffs = n_coeffs
        self.frame_s = frame_s
        self.hop_s = hop_s
        self.n_filters = n_filters
        self.preemphasis = preemphasis

    def fit(self, X, y=None):
        self.n_features_in_ = check_array(X).shape[1]
        return self

    def transform(self, X):
        X = check_array(X, dtype=np.float64)
        kw = dict(frame_s=self.frame_s, hop_s=self.hop_s, n_filters=self.n_filters, preemphasis=self.preemphasis)
        return np.vstack([
            extract_mfcc_features(row, self.n_coeffs, self.sample_rate, **kw).values for row in X
        ])


# -- CSV ---------------------------------------------------------------------

def write_feature_csv(dataset: Dataset, path) -> Path:
    """Header of feature names plus ``label``; one row per segment.

    Floats are written with ``repr`` so reading back is exact and repeated
    writes of the same data are byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*dataset.feature_names, "label"])
        for x, lab in zip(dataset.X, dataset.labels):
            w.writerow([*(repr(float(v)) for v in x), lab])
    return path


def read_feature_csv(path, class_names=None) -> Dataset:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ValueError(f"{path}: last column must be 'label'")
        rows = [r for r in reader if r]
    X = np.array([[float(v) for v in r[:-1]] for r in rows], dtype=np.float64).reshape(len(rows), len(header) - 1)
    return Dataset(X, [r[-1] for r in rows], header[:-1], class_names)
