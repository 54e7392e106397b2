import csv
import io
import shutil
import subprocess
import sys

import numpy as np
import pytest

from tricodec import decode, render
from tricodec.cli import (EXIT_BUDGET, EXIT_FORMAT, EXIT_IO, EXIT_OK, EXIT_USAGE, BenchRecord,
                          gnuplot_data, main, read_csv, summarize)
from tricodec.raster import load_image

CORPUS = "tests/data/corpus"
FAST = ["--iters", "40", "--config"]


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text("init_vertices = 60\ncandidates = 8\n")
    return str(path)


def test_encode_decode_report(tmp_path, fast_config, capsys):
    tri = tmp_path / "a.tri"
    assert main(["encode", f"{CORPUS}/coffee.png", str(tri), *FAST, fast_config]) == EXIT_OK
    err = capsys.readouterr().err
    assert err.startswith("bytes=") and "psnr=" in err and "ssim=" in err
    data = tri.read_bytes()
    assert len(data) <= 200
    out = tmp_path / "a.png"
    assert main(["decode", str(tri), str(out)]) == EXIT_OK
    assert np.array_equal(load_image(out).pixels, render(decode(data)).pixels)
    assert main(["decode", str(tri), str(tmp_path / "b.ppm"), "--scale", "2"]) == EXIT_OK
    assert load_image(tmp_path / "b.ppm").pixels.shape == (442, 442, 3)
    assert main(["render", str(tri), str(tmp_path / "w.png"), "--wireframe"]) == EXIT_OK
    assert main(["report", str(tri), f"{CORPUS}/coffee.png"]) == EXIT_OK
    assert "occupancy bits=" in capsys.readouterr().out


def test_baseline_is_deterministic(tmp_path):
    a, b = tmp_path / "a.tri", tmp_path / "b.tri"
    for path in (a, b):
        assert main(["encode", f"{CORPUS}/coins.png", str(path), "--algorithm", "baseline",
                     "--grid", "15"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_bytes()) <= 100


def test_exit_codes(tmp_path):
    assert main([]) == EXIT_USAGE
    assert main(["encode", "x.png"]) == EXIT_USAGE
    assert main(["encode", f"{CORPUS}/coins.png", str(tmp_path / "o.tri"), "--ops", "xyz"]) \
        == EXIT_USAGE
    assert main(["encode", str(tmp_path / "missing.png"), str(tmp_path / "o.tri")]) == EXIT_IO
    not_image = tmp_path / "note.png"
    not_image.write_text("hello")
    assert main(["encode", str(not_image), str(tmp_path / "o.tri")]) == EXIT_IO
    assert main(["encode", f"{CORPUS}/coins.png", str(tmp_path / "o.tri"),
                 "--budget", "5"]) == EXIT_BUDGET
    bad = tmp_path / "bad.tri"
    bad.write_bytes(b"\x10\x00garbage")
    assert main(["decode", str(bad), str(tmp_path / "x.png")]) == EXIT_FORMAT
    assert main(["bench", str(tmp_path / "nowhere")]) == EXIT_IO


def test_empty_corpus_is_usage_error(tmp_path):
    assert main(["bench", str(tmp_path)]) == EXIT_USAGE


def test_config_command(capsys):
    assert main(["config", "--grid", "96", "--ops", "abc"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "grid = 96" in out and "p_d = 0.0" in out


def small_corpus(tmp_path, names=("coffee", "coins")):
    root = tmp_path / "corpus"
    root.mkdir()
    for n in names:
        shutil.copy(f"{CORPUS}/{n}.png", root / f"{n}.png")
    return root


def test_bench_csv_summary_and_gnuplot(tmp_path, fast_config, capsys):
    root = small_corpus(tmp_path)
    out, plot = tmp_path / "b.csv", tmp_path / "b.dat"
    ext = tmp_path / "ext.csv"
    ext.write_text("codec,setting,image,bytes,psnr,ssim\njpeg,q5,coffee,400,20.5,0.5\n"
                   "jpeg,q5,coins,420,21.5,0.6\n")
    args = ["bench", str(root), "--grids", "10,15", "--op-sets", "init,abcdefg", "--iters", "30",
            "--config", fast_config, "--csv", str(out), "--gnuplot", str(plot),
            "--external-csv", str(ext), "--no-timing"]
    assert main(args) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["image", "grid", "bytes", "psnr", "ssim", "seconds", "seed", "ops"]
    assert [(r["image"], r["grid"], r["ops"]) for r in rows] == [
        (i, g, o) for i in ("coffee", "coins") for g in ("10", "15") for o in ("init", "abcdefg")]
    assert all(r["seconds"] == "0.0" for r in rows)
    summary = capsys.readouterr().err
    assert "jpeg:q5" in summary
    assert "# jpeg" in plot.read_text()
    first = out.read_text()
    assert main(args) == EXIT_OK
    assert out.read_text() == first


def test_bench_parallel_matches_serial(tmp_path, fast_config):
    root = small_corpus(tmp_path)
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / f"j{jobs}.csv"
        assert main(["bench", str(root), "--iters", "20", "--config", fast_config, "--csv",
                     str(out), "--no-timing", "--jobs", jobs, "--seeds", "0,1"]) == EXIT_OK
        outs.append(out.read_text())
    assert outs[0] == outs[1]


def test_summary_helpers():
    recs = [BenchRecord("a", 15, 100, 20.0, 0.5, 1.0, 0, "init"),
            BenchRecord("b", 15, 110, 22.0, 0.7, 1.0, 0, "init")]
    assert summarize(recs) == [("init", 15, 2, 105.0, 21.0, 0.6)]
    assert gnuplot_data(summarize(recs)).startswith("# init\n")
    buf = io.StringIO("image,grid,bytes,psnr,ssim,seconds,seed,ops\na,15,100,20.0,0.5,1.0,0,init\n")
    assert read_csv(buf) == recs[:1]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "tricodec", "config"], capture_output=True, text=True)
    assert r.returncode == 0 and "budget = auto" in r.stdout
