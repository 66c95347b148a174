"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import AudioClip, load_audio, resample, write_audio
from .eval import MODEL_VARIANTS, CvPlan, build_pipeline, cross_validate, emit_report
from .exceptions import ConfigError, SingerIdError
from .features import read_feature_csv, write_feature_csv
from .persist import save_model
from .pipeline import extract_manifest, read_manifest, run_pipeline
from .rpca import RpcaConfig, separate_voice
from .spectral import stft
from .wavelet import WaveletSpec, denoise, wavedec, write_bands_csv
from .config import ENV_PREFIX, load_config

logger = logging.getLogger("singerid")


def _global_options():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default: config cv.seed)")
    g.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="JSON pipeline config")
    g.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="parallel worker count")
    g.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS, help="more logging")
    return p


def _add_rpca_options(p):
    p.add_argument("--window-len", type=int, help="STFT window length (power of two)")
    p.add_argument("--hop", type=int, help="STFT hop in samples")
    p.add_argument("--lam", type=float, help="sparsity weight (default 1/sqrt(max(n, p)))")
    p.add_argument("--rho", type=float, help="penalty growth factor")
    p.add_argument("--tol", type=float, help="relative residual tolerance")
    p.add_argument("--max-iter", type=int, help="iteration cap")


def _add_wavelet_options(p):
    p.add_argument("--family", help="Daubechies family, db1..db8")
    p.add_argument("--levels", type=int, help="decomposition depth")
    p.add_argument("--extension", choices=("symmetric", "periodization"))
    p.add_argument("--k", type=float, help="threshold scale in [0, 1]")
    p.add_argument("--mode", choices=("soft", "hard"))


def _add_cv_options(p):
    p.add_argument("--model", choices=MODEL_VARIANTS)
    p.add_argument("--C", dest="C", type=float, help="SVM box constraint")
    p.add_argument("--gamma", type=float, help="RBF width (default 1/(n_features*var))")
    p.add_argument("--degree", type=int, help="polynomial degree")
    p.add_argument("--n-components", type=int, help="GMM components per class")
    p.add_argument("--variance-retained", type=float, help="PCA variance fraction")


def build_parser() -> argparse.ArgumentParser:
    glob = _global_options()
    parser = argparse.ArgumentParser(
        prog="singerid", parents=[glob],
        description="Singer identification: RPCA separation, wavelet features, SVM/GMM evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("separate", parents=[glob], help="split a WAV into voice and music stems")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--out-dir", type=Path, default=Path("."))
    p.add_argument("--sample-rate", type=int, help="resample before separating")
    _add_rpca_options(p)

    p = sub.add_parser("denoise", parents=[glob], help="wavelet-threshold denoise a WAV")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--bands-csv", type=Path, help="also dump the denoised sub-band coefficients")
    _add_wavelet_options(p)

    p = sub.add_parser("extract", parents=[glob], help="features for every segment in a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--variant", choices=("dwt", "mfcc", "raw"), default="dwt")
    p.add_argument("-o", "--out", type=Path, required=True, help="feature CSV")
    p.add_argument("--sample-rate", type=int)
    p.add_argument("--segment-seconds", type=float)
    p.add_argument("--separate", action="store_true", help="run RPCA separation first")
    p.add_argument("--n-mfcc", type=int)
    _add_rpca_options(p)
    _add_wavelet_options(p)

    p = sub.add_parser("train", parents=[glob], help="fit scaler+PCA+classifier on a feature CSV")
    p.add_argument("features", type=Path)
    p.add_argument("-o", "--out", type=Path, required=True, help="model JSON")
    _add_cv_options(p)

    p = sub.add_parser("evaluate", parents=[glob], help="repeated k-fold cross-validation")
    p.add_argument("features", type=Path)
    p.add_argument("-o", "--out-dir", type=Path, required=True)
    p.add_argument("--folds", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--stratified", action="store_true", default=None)
    _add_cv_options(p)

    p = sub.add_parser("pipeline", parents=[glob], help="separate -> denoise -> extract -> evaluate, cached")
    p.add_argument("pipeline_config", type=Path, nargs="?", help="config file (or use --config)")
    return parser


def _set(doc, section, key, value):
    if value is not None:
        doc.setdefault(section, {})[key] = value


def _overrides(args) -> dict:
    o = {}
    for key, dest in (("window_len", "window_len"), ("hop", "hop")):
        _set(o, "stft", key, getattr(args, dest, None))
    for key in ("lam", "rho", "tol", "max_iter"):
        _set(o, "rpca", key, getattr(args, key, None))
    for key in ("family", "levels", "extension", "k", "mode"):
        _set(o, "wavelet", key, getattr(args, key, None))
    for key in ("folds", "repeats", "stratified", "model", "C", "gamma", "degree", "n_components",
                "variance_retained", "seed"):
        _set(o, "cv", key, getattr(args, key, None))
    _set(o, "features", "n_mfcc", getattr(args, "n_mfcc", None))
    if getattr(args, "variant", None):
        o.setdefault("features", {})["variant"] = args.variant
    for key in ("sample_rate", "segment_seconds", "workers"):
        if getattr(args, key, None) is not None:
            o[key] = getattr(args, key)
    return o


def _config(args, check_paths=False):
    path = getattr(args, "config", None) or os.environ.get(ENV_PREFIX + "CONFIG")
    return load_config(path, _overrides(args), check_paths=check_paths)


def cmd_separate(args) -> int:
    cfg = _config(args)
    clip = load_audio(args.input)
    if args.sample_rate:
        clip = resample(clip, args.sample_rate)
    st = cfg.doc["stft"]
    voice, music = separate_voice(stft(clip, st["window_len"], st["hop"]), cfg.rpca)
    stem = args.input.stem
    v = write_audio(args.out_dir / f"{stem}.voice.wav", voice)
    m = write_audio(args.out_dir / f"{stem}.music.wav", music)
    print(f"wrote {v}")
    print(f"wrote {m}")
    return 0


def cmd_denoise(args) -> int:
    cfg = _config(args)
    w = cfg.doc["wavelet"]
    clip = load_audio(args.input)
    spec = cfg.wavelet
    y = denoise(clip.samples, spec, w["k"], w["mode"])
    write_audio(args.output, AudioClip(y, clip.sample_rate))
    if args.bands_csv:
        write_bands_csv(wavedec(y, spec, clip.sample_rate), args.bands_csv)
    print(f"wrote {args.output}")
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    d, w = cfg.doc, cfg.doc["wavelet"]
    entries = read_manifest(args.manifest)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        data, skipped = extract_manifest(
            entries, args.variant, cfg.sample_rate, cfg.segment_seconds, args.separate,
            d["stft"]["window_len"], d["stft"]["hop"], cfg.rpca, cfg.wavelet, w["k"], w["mode"],
            d["features"]["n_mfcc"],
        )
    for c in caught:
        logger.warning("%s", c.message)
    write_feature_csv(data, args.out)
    print(f"wrote {len(data)} rows x {data.X.shape[1]} features to {args.out}; skipped {len(skipped)} file(s)")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    data = read_feature_csv(args.features)
    plan = cfg.cv_plan
    pipe = build_pipeline(plan)
    pipe.fit(data.X, np.array(data.labels, dtype=object))
    save_model(args.out, pipe, data.feature_names, {"plan": cfg.section("cv")})
    print(f"wrote {args.out} ({plan.model}, {pipe.named_steps['pca'].n_components_} PCA components)")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    data = read_feature_csv(args.features)
    plan = CvPlan(**{**cfg.section("cv"), "features": "none"})
    report = cross_validate(data, plan, workers=int(cfg.doc["workers"]))
    path = emit_report(report, args.out_dir / "accuracies.csv")
    print(report.summary())
    print(f"wrote {path}")
    return 0


def cmd_pipeline(args) -> int:
    path = args.pipeline_config or getattr(args, "config", None) or os.environ.get(ENV_PREFIX + "CONFIG")
    if path is None:
        raise ConfigError("pipeline needs a config file")
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["cv"] = {"seed": args.seed}
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    cfg = load_config(path, overrides)
    result = run_pipeline(cfg, echo=print)
    print(f"report: {result.report_path}")
    return 0


COMMANDS = {
    "separate": cmd_separate,
    "denoise": cmd_denoise,
    "extract": cmd_extract,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    verbosity = getattr(args, "verbose", 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(verbosity, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"singerid: config error: {exc}", file=sys.stderr)
        return 2
    except (SingerIdError, OSError, ValueError, RuntimeError) as exc:
        print(f"singerid {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
