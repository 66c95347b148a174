import csv
import subprocess
import sys

import numpy as np
import pytest

from singerid.audio_io import AudioClip, load_audio, write_audio
from singerid.cli import main
from singerid.datasets import make_singer_clip
from singerid.eval import kfold_split
from singerid.pipeline import write_manifest


def _blob_csv(path, n_per=50, seed=0):
    rng = np.random.default_rng(seed)
    centers = [(0, 0), (10, 0), (0, 10), (10, 10)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "label"])
        for i, c in enumerate(centers):
            for row in rng.normal(c, 1.0, (n_per, 2)):
                w.writerow([repr(float(row[0])), repr(float(row[1])), f"class{i}"])
    return path


def test_separate_silent_and_additive(tmp_path, capsys):
    write_audio(tmp_path / "quiet.wav", AudioClip(np.zeros(8000), 4160))
    assert main(["separate", str(tmp_path / "quiet.wav"), "-o", str(tmp_path)]) == 0
    assert not load_audio(tmp_path / "quiet.voice.wav", normalize=False).samples.any()
    assert not load_audio(tmp_path / "quiet.music.wav", normalize=False).samples.any()

    clip = make_singer_clip("tenor", duration=4.0, sample_rate=4160, rng=1)
    write_audio(tmp_path / "song.wav", clip)
    assert main(["separate", str(tmp_path / "song.wav"), "-o", str(tmp_path)]) == 0
    x = load_audio(tmp_path / "song.wav", normalize=False).samples
    v = load_audio(tmp_path / "song.voice.wav", normalize=False).samples
    m = load_audio(tmp_path / "song.music.wav", normalize=False).samples
    assert np.linalg.norm(v + m - x) / np.linalg.norm(x) <= 0.1


def test_separate_unreadable(tmp_path, capsys):
    (tmp_path / "junk.wav").write_bytes(b"not a wav")
    assert main(["separate", str(tmp_path / "junk.wav")]) == 1
    assert "singerid" in capsys.readouterr().err
    assert main(["separate", str(tmp_path / "missing.wav")]) == 1


def test_denoise_writes_bands(tmp_path):
    clip = make_singer_clip("alto", duration=2.0, sample_rate=4160, rng=0)
    write_audio(tmp_path / "in.wav", clip)
    rc = main(["denoise", str(tmp_path / "in.wav"), str(tmp_path / "out.wav"), "--k", "0.5",
               "--bands-csv", str(tmp_path / "bands.csv")])
    assert rc == 0
    assert load_audio(tmp_path / "out.wav").samples.size == clip.samples.size
    assert (tmp_path / "bands.csv").read_text().startswith("band,index,coefficient")


def test_extract_rows_and_determinism(tmp_path):
    entries = []
    for i, singer in enumerate(["alto", "bass"]):
        p = tmp_path / f"{singer}.wav"
        write_audio(p, make_singer_clip(singer, duration=24.0, sample_rate=8320, rng=i))
        entries.append((p, singer))
    entries.append((tmp_path / "missing.wav", "alto"))
    manifest = write_manifest(tmp_path / "manifest.csv", entries)
    out1, out2 = tmp_path / "f1.csv", tmp_path / "f2.csv"
    assert main(["extract", str(manifest), "--variant", "dwt", "-o", str(out1)]) == 0
    assert main(["extract", str(manifest), "--variant", "dwt", "-o", str(out2)]) == 0
    rows = out1.read_text().splitlines()
    assert len(rows) == 5
    header = rows[0].split(",")
    assert len(header) == 19 and header[-1] == "label"
    assert [r.rsplit(",", 1)[1] for r in rows[1:]] == ["alto", "alto", "bass", "bass"]
    assert out1.read_bytes() == out2.read_bytes()


def test_evaluate_smoke(tmp_path, capsys):
    feats = _blob_csv(tmp_path / "blobs.csv")
    rc = main(["evaluate", str(feats), "-o", str(tmp_path / "rep"), "--folds", "5", "--repeats", "3"])
    assert rc == 0
    out = capsys.readouterr().out
    mean = float(out.split("mean accuracy ")[1].split()[0])
    assert mean >= 0.99
    assert (tmp_path / "rep" / "accuracies.csv").exists()
    assert (tmp_path / "rep" / "accuracies.confusion.csv").exists()


def test_train_writes_model(tmp_path):
    feats = _blob_csv(tmp_path / "blobs.csv", n_per=15)
    assert main(["train", str(feats), "-o", str(tmp_path / "model.json"), "--model", "gmm",
                 "--n-components", "2"]) == 0
    assert '"gmm-bank"' in (tmp_path / "model.json").read_text()


def test_usage_errors(tmp_path, capsys):
    feats = _blob_csv(tmp_path / "blobs.csv", n_per=5)
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", str(feats), "-o", str(tmp_path), "--model", "bogus"])
    assert exc.value.code == 2
    assert main(["evaluate", str(feats), "-o", str(tmp_path), "--folds", "1"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[")
    assert main(["pipeline", str(bad)]) == 2


def test_seed_changes_shuffle_not_sizes():
    a, b = kfold_split(103, 10, 1), kfold_split(103, 10, 2)
    assert [t.size for _, t in a] == [t.size for _, t in b]
    assert any(not np.array_equal(x[1], y[1]) for x, y in zip(a, b))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "singerid", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("separate", "denoise", "extract", "train", "evaluate", "pipeline"):
        assert cmd in res.stdout
