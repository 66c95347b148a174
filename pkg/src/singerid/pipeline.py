"""Manifest handling, batch feature extraction and the cached end-to-end
run: separate -> denoise -> extract -> evaluate."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shutil
import tempfile
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, load_audio, resample, segment
from .exceptions import StageError
from .eval import EvalReport, cross_validate, emit_report, read_report
from .features import (
    Dataset,
    extract_dwt_features,
    extract_mfcc_features,
    extract_raw_features,
    read_feature_csv,
    write_feature_csv,
)
from .rpca import RpcaConfig, separate_voice
from .spectral import stft
from .wavelet import WaveletSpec, denoise

__all__ = [
    "read_manifest",
    "write_manifest",
    "load_segments",
    "separate_segments",
    "featurize",
    "extract_manifest",
    "PipelineResult",
    "run_pipeline",
]

logger = logging.getLogger(__name__)


def read_manifest(path):
    """``path,label`` CSV; relative paths resolve against the manifest's folder."""
    path = Path(path)
    base = path.resolve().parent
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"path", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: manifest needs 'path' and 'label' columns")
        return [((base / row["path"]).resolve(), row["label"]) for row in reader if row["path"]]


def write_manifest(path, entries):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.resolve().parent
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label"])
        for p, label in entries:
            p = Path(p).resolve()
            try:
                p = p.relative_to(base)
            except ValueError:
                pass
            w.writerow([p.as_posix(), label])
    return path


def load_segments(path, label, sample_rate, segment_seconds):
    clip = load_audio(path, label)
    return segment(resample(clip, sample_rate), segment_seconds)


def separate_segments(segments, window_len=1024, hop=256, rpca: RpcaConfig | None = None):
    """Voice stem of each segment."""
    return [separate_voice(stft(s, window_len, hop), rpca)[0] for s in segments]


def featurize(samples, variant, sample_rate, wavelet=WaveletSpec(), k=0.3, mode="soft",
              apply_denoise=True, n_mfcc=13):
    if variant == "dwt":
        return extract_dwt_features(samples, wavelet, k, mode, apply_denoise)
    if variant == "mfcc":
        return extract_mfcc_features(samples, n_mfcc, sample_rate)
    if variant == "raw":
        return extract_raw_features(samples)
    raise ValueError(f"unknown feature variant {variant!r}")


def extract_manifest(entries, variant="dwt", sample_rate=4160, segment_seconds=12.0, separate=False,
                     window_len=1024, hop=256, rpca=None, wavelet=WaveletSpec(), k=0.3, mode="soft",
                     n_mfcc=13):
    """Feature rows for every segment of every manifest entry.

    Rows follow manifest order, then segment order. Missing or unreadable
    files are skipped with a warning; returns ``(dataset, skipped_paths)``.
    """
    vectors, skipped = [], []
    for path, label in entries:
        try:
            segs = load_segments(path, label, sample_rate, segment_seconds)
        except OSError as exc:
            warnings.warn(f"skipping {path}: {exc}", stacklevel=2)
            skipped.append(path)
            continue
        if separate:
            segs = separate_segments(segs, window_len, hop, rpca)
        for s in segs:
            fv = featurize(s.samples, variant, sample_rate, wavelet, k, mode, True, n_mfcc)
            fv.label = label
            vectors.append(fv)
    if not vectors:
        raise ValueError("no segments extracted from the manifest")
    return Dataset.from_vectors(vectors), skipped


# -- cached pipeline ---------------------------------------------------------

def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(json.dumps(p, sort_keys=True, default=str).encode())
        h.update(b"\0")
    return h.hexdigest()[:24]


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_save_npz(path: Path, **arrays):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".npz")
    os.close(fd)
    np.savez(tmp, **arrays)
    os.replace(tmp, path)


def _separate_job(args):
    path, label, rate, seconds, do_separate, win, hop, rpca_kw = args
    segs = load_segments(path, label, rate, seconds)
    if do_separate:
        segs = separate_segments(segs, win, hop, RpcaConfig(**rpca_kw))
    n = int(round(seconds * rate))
    return np.array([s.samples for s in segs]).reshape(len(segs), n)


@dataclass
class PipelineResult:
    stages: dict
    report: EvalReport
    features_path: Path
    report_path: Path
    skipped: list = field(default_factory=list)


def run_pipeline(cfg, workers=None, echo=None) -> PipelineResult:
    """Run every stage, reusing cached outputs whose inputs are unchanged.

    Each stage's cache key hashes its own parameters together with the
    keys of the stages it reads from, so editing e.g. the wavelet ``k``
    recomputes denoise, extract and evaluate but keeps separation. A
    failure is re-raised as :class:`StageError` naming the stage.
    """
    state = {"stage": "separate"}
    try:
        return _run(cfg, workers, echo, state)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(state["stage"], exc) from exc


def _run(cfg, workers, echo, state) -> PipelineResult:
    echo = echo or (lambda msg: logger.info(msg))
    workers = int(workers or cfg.doc["workers"])
    out = cfg.output_dir
    cache = out / "cache"
    rate, seconds = cfg.sample_rate, cfg.segment_seconds
    stft_p, rpca_p, wav_p = cfg.section("stft"), cfg.section("rpca"), cfg.section("wavelet")
    variant = cfg.variant
    stages = {}

    entries, skipped = [], []
    for path, label in read_manifest(cfg.manifest):
        if path.is_file():
            entries.append((path, label))
        else:
            warnings.warn(f"skipping missing file {path}", stacklevel=2)
            skipped.append(path)
    if not entries:
        raise ValueError("manifest lists no readable files")

    # separate
    sep_params = {"rate": rate, "seconds": seconds, "separate": cfg.doc["separate"], "stft": stft_p, "rpca": rpca_p}
    sep_keys = [_digest("separate", _file_digest(p), sep_params) for p, _ in entries]
    todo = [i for i, key in enumerate(sep_keys) if not (cache / "separate" / f"{key}.npz").is_file()]
    jobs = [(entries[i][0], entries[i][1], rate, seconds, cfg.doc["separate"],
             stft_p["window_len"], stft_p["hop"], rpca_p) for i in todo]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_separate_job, jobs))
    else:
        results = [_separate_job(j) for j in jobs]
    for i, arr in zip(todo, results):
        _atomic_save_npz(cache / "separate" / f"{sep_keys[i]}.npz", segments=arr)
    stages["separate"] = "computed" if todo else "cached"
    echo(f"separate: {stages['separate']} ({len(todo)}/{len(entries)} files processed)")

    # denoise (dwt only)
    state["stage"] = "denoise"
    if variant == "dwt":
        spec = cfg.wavelet
        den_keys = [_digest("denoise", k, wav_p) for k in sep_keys]
        n_new = 0
        for sk, dk in zip(sep_keys, den_keys):
            target = cache / "denoise" / f"{dk}.npz"
            if target.is_file():
                continue
            segs = np.load(cache / "separate" / f"{sk}.npz")["segments"]
            den = np.array([denoise(s, spec, wav_p["k"], wav_p["mode"]) for s in segs]).reshape(segs.shape)
            _atomic_save_npz(target, segments=den)
            n_new += 1
        stages["denoise"] = "computed" if n_new else "cached"
        upstream, upstream_dir = den_keys, "denoise"
    else:
        stages["denoise"] = "skipped"
        upstream, upstream_dir = sep_keys, "separate"
    echo(f"denoise: {stages['denoise']}")

    # extract
    state["stage"] = "extract"
    feat_params = {"variant": variant, "rate": rate, "features": cfg.section("features"),
                   "wavelet": {k: wav_p[k] for k in ("family", "levels", "extension")}}
    ext_key = _digest("extract", [(k, lab) for k, (_, lab) in zip(upstream, entries)], feat_params)
    feat_cache = cache / "extract" / f"{ext_key}.csv"
    if feat_cache.is_file():
        stages["extract"] = "cached"
    else:
        vectors = []
        for key, (_, label) in zip(upstream, entries):
            segs = np.load(cache / upstream_dir / f"{key}.npz")["segments"]
            for s in segs:
                fv = featurize(s, variant, rate, cfg.wavelet, wav_p["k"], wav_p["mode"],
                               apply_denoise=False, n_mfcc=cfg.doc["features"]["n_mfcc"])
                fv.label = label
                vectors.append(fv)
        if not vectors:
            raise ValueError("no segments long enough to extract; check segment_seconds")
        write_feature_csv(Dataset.from_vectors(vectors), feat_cache)
        stages["extract"] = "computed"
    features_path = out / "features.csv"
    shutil.copyfile(feat_cache, features_path)
    echo(f"extract: {stages['extract']}")

    # evaluate
    state["stage"] = "evaluate"
    plan = cfg.cv_plan
    eval_key = _digest("evaluate", _file_digest(feat_cache), cfg.section("cv"), variant)
    eval_dir = cache / "evaluate" / eval_key
    if (eval_dir / "accuracies.csv").is_file():
        stages["evaluate"] = "cached"
        report = read_report(eval_dir / "accuracies.csv")
    else:
        report = cross_validate(read_feature_csv(feat_cache), plan)
        tmp = Path(tempfile.mkdtemp(dir=cache))
        emit_report(report, tmp / "accuracies.csv")
        if eval_dir.exists():
            shutil.rmtree(eval_dir)
        eval_dir.parent.mkdir(parents=True, exist_ok=True)
        os.replace(tmp, eval_dir)
        stages["evaluate"] = "computed"
    report_dir = out / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    for name in ("accuracies.csv", "accuracies.confusion.csv"):
        shutil.copyfile(eval_dir / name, report_dir / name)
    echo(f"evaluate: {stages['evaluate']}; {report.summary()}")
    return PipelineResult(stages, report, features_path, report_dir / "accuracies.csv", skipped)
