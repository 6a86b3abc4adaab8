import subprocess
import sys

import numpy as np
import pytest

from avseld.cli import run, scene_seed
from avseld.labels import ACCDOA_MAGIC, VISUAL_MAGIC, read_metadata, read_tensor
from avseld.pngseq import list_frames, read_frame, read_sidecar, write_frames, write_sidecar
from avseld.wavio import read_foa


@pytest.fixture
def scene_dir(tmp_path, asset_dir):
    out = tmp_path / "synth"
    code = run([
        "synth", "--seed", "4", "--count", "2", "--duration", "4", "--assets", str(asset_dir),
        "--out", str(out), "--width", "200", "--fps", "5",
    ])
    assert code == 0
    return out


def test_help_lists_formats(capsys):
    assert run(["--help"]) == 0
    assert "metadata CSV" in capsys.readouterr().out
    assert run(["augment", "--help"]) == 0
    assert "STEM_tN.wav" in capsys.readouterr().out


def test_usage_errors(tmp_path, capsys):
    assert run([]) == 2
    assert run(["eval", "--ref", str(tmp_path)]) == 2
    assert run(["eval", "--ref", str(tmp_path), "--pred", str(tmp_path)]) == 2
    assert "no metadata files" in capsys.readouterr().err
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1,0,30,10\n0,1,0,30\n")
    assert run(["encode-accdoa", "--meta", str(bad), "--out", str(tmp_path / "y.bin")]) == 2
    assert "bad.csv:2:" in capsys.readouterr().err
    assert not (tmp_path / "y.bin").exists()


def test_synth_outputs(scene_dir):
    names = ["synth_mix001", "synth_mix002"]
    for name in names:
        clip, _ = read_foa(scene_dir / "foa" / f"{name}.wav")
        assert clip.samples.shape == (4, 4 * 24000)
        assert read_metadata(scene_dir / "metadata" / f"{name}.csv")
        frames = list_frames(scene_dir / "video" / name)
        assert len(frames) == 20 and read_frame(frames[0]).shape == (100, 200, 3)
        assert read_sidecar(scene_dir / "video" / name)["count"] == 20
    assert scene_seed(4, 0) != scene_seed(4, 1)


def test_synth_start_index_reproduces(tmp_path, asset_dir, scene_dir):
    out = tmp_path / "again"
    assert run([
        "synth", "--seed", "4", "--start-index", "1", "--duration", "4", "--assets", str(asset_dir),
        "--out", str(out), "--no-video",
    ]) == 0
    a = (scene_dir / "foa" / "synth_mix002.wav").read_bytes()
    assert (out / "foa" / "synth_mix002.wav").read_bytes() == a
    assert not (out / "video").exists()


def test_augment_and_validate(tmp_path, scene_dir, capsys):
    frames = scene_dir / "video" / "synth_mix001"
    out = tmp_path / "aug"
    assert run([
        "augment", "--audio", str(scene_dir / "foa" / "synth_mix001.wav"),
        "--meta", str(scene_dir / "metadata" / "synth_mix001.csv"),
        "--frames", str(frames), "--out", str(out), "--jobs", "2",
    ]) == 0
    for n in range(8):
        stem = f"synth_mix001_t{n}"
        assert (out / "foa" / f"{stem}.wav").exists()
        assert (out / "metadata" / f"{stem}.csv").exists()
        assert len(list_frames(out / "video" / stem)) == 20
    assert (out / "foa" / "synth_mix001_t0.wav").read_bytes() == (scene_dir / "foa" / "synth_mix001.wav").read_bytes()
    f0 = read_frame(list_frames(frames)[3])
    f5 = read_frame(list_frames(out / "video" / "synth_mix001_t5")[3])
    assert np.array_equal(f5, np.roll(f0, 50, axis=1)[::-1])
    for n in range(8):
        stem = f"synth_mix001_t{n}"
        code = run(["validate-doa", "--audio", str(out / "foa" / f"{stem}.wav"),
                    "--meta", str(out / "metadata" / f"{stem}.csv"), "--tolerance", "10"])
        assert code == 0, capsys.readouterr().out


def test_validate_doa_failure_exit(tmp_path, scene_dir):
    meta = scene_dir / "metadata" / "synth_mix001.csv"
    rows = [line.split(",") for line in meta.read_text().splitlines()]
    wrong = "".join(f"{f},{c},{s},{(int(a) + 190) % 360 - 180},{e}\n" for f, c, s, a, e in rows)
    (tmp_path / "w.csv").write_text(wrong)
    code = run(["validate-doa", "--audio", str(scene_dir / "foa" / "synth_mix001.wav"),
                "--meta", str(tmp_path / "w.csv"), "--min-run", "1"])
    assert code == 1


def test_eval(tmp_path, scene_dir, capsys):
    ref = scene_dir / "metadata"
    csv_out = tmp_path / "scores.csv"
    assert run(["eval", "--ref", str(ref), "--pred", str(ref), "--csv", str(csv_out)]) == 0
    out = capsys.readouterr().out
    assert "ALL" in out and "0.0000" in out
    lines = csv_out.read_text().splitlines()
    assert lines[0] == "file,ER20,F20,LE,LR"
    assert lines[3] == "ALL,0.0000,1.0000,0.0000,1.0000"

    pred = tmp_path / "pred"
    pred.mkdir()
    assert run(["eval", "--ref", str(ref), "--pred", str(pred)]) == 0
    assert "undefined" in capsys.readouterr().out


def test_encoders(tmp_path, scene_dir, capsys):
    meta = scene_dir / "metadata" / "synth_mix001.csv"
    assert run(["encode-accdoa", "--meta", str(meta), "--out", str(tmp_path / "a.bin"), "--frames", "40"]) == 0
    assert read_tensor(tmp_path / "a.bin", ACCDOA_MAGIC).shape == (40, 3, 13, 3)
    boxes = tmp_path / "b.csv"
    boxes.write_text("0,0.5,0.5,0.2,0.2\n3,0.1,0.9,0.1,0.1\n")
    assert run(["encode-visual", "--boxes", str(boxes), "--out", str(tmp_path / "v.bin")]) == 0
    v = read_tensor(tmp_path / "v.bin", VISUAL_MAGIC)
    assert v.shape == (4, 2, 6, 37) and v[0, 0, 0, 18] == 1.0
    assert "4x2x6x37" in capsys.readouterr().out


def test_augment_npy_frames(tmp_path, asset_dir):
    out = tmp_path / "s"
    assert run(["synth", "--duration", "2", "--assets", str(asset_dir), "--out", str(out), "--no-video"]) == 0
    frames = tmp_path / "frames"
    frames.mkdir()
    f = np.random.default_rng(0).integers(0, 255, (8, 16, 3), dtype=np.uint8)
    np.save(frames / "000000.npy", f)
    assert run(["augment", "--audio", str(out / "foa" / "synth_mix001.wav"),
                "--meta", str(out / "metadata" / "synth_mix001.csv"),
                "--frames", str(frames), "--out", str(tmp_path / "aug"), "--name", "clip"]) == 0
    got = np.load(tmp_path / "aug" / "video" / "clip_t1" / "000000.npy")
    assert np.array_equal(got, np.roll(f, 4, axis=1))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "avseld", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "validate-doa" in proc.stdout
