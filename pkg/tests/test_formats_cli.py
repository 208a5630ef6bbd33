import csv
import hashlib
import json
import os

import numpy as np
import pytest

from cpdeconv import HsiCube, KernelBank, SolverConfig, gaussian_kernel, synth_lowrank
from cpdeconv import formats
from cpdeconv.cli import main
from conftest import random_factors


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


def sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


# --- binary formats -------------------------------------------------------


def test_cube_round_trip(tmp_path, rng):
    cube = HsiCube(rng.normal(size=(3, 4, 5)))
    path = tmp_path / "c.hsc"
    formats.write_cube(path, cube)
    assert os.path.getsize(path) == 17 + 8 * 4 * 5 * 3
    back = formats.read_cube(path)
    assert back.data.tobytes() == cube.data.tobytes()
    assert back.shape == (4, 5, 3)


def test_factor_round_trip(tmp_path, rng):
    f = random_factors(rng, 4, 3, 2, 3)
    path = tmp_path / "f.hsf"
    formats.write_factors(path, f)
    assert os.path.getsize(path) == 20 + 8 * (4 + 3 + 2) * 3
    g = formats.read_factors(path)
    for x, y in zip((f.a, f.b, f.c), (g.a, g.b, g.c)):
        assert x.tobytes() == y.tobytes()


def test_factor_layout_is_column_major():
    f = formats.CpdFactors(np.array([[1.0, 2.0], [3.0, 4.0]]), np.ones((1, 2)), np.ones((1, 2)))
    body = np.frombuffer(formats.factors_to_bytes(f)[20:], "<f8")
    np.testing.assert_array_equal(body[:4], [1.0, 3.0, 2.0, 4.0])


def test_kernel_round_trip(tmp_path):
    kb = KernelBank.from_kernel(gaussian_kernel(3, 1.0), 6, 5, 2)
    path = tmp_path / "k.hsk"
    formats.write_kernels(path, kb)
    assert os.path.getsize(path) == 16 + 8 * 6 * 5 * 2
    assert formats.read_kernels(path).kernels.tobytes() == kb.kernels.tobytes()


def test_truncated_and_wrong_magic(tmp_path, rng):
    path = tmp_path / "c.hsc"
    formats.write_cube(path, HsiCube(rng.normal(size=(2, 2, 2))))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(formats.FormatError):
        formats.read_cube(path)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(formats.FormatError):
        formats.read_cube(path)
    with pytest.raises(formats.FormatError):
        formats.read_factors(tmp_path / "c.hsc")


def test_atomic_write_leaves_no_temp(tmp_path):
    formats.atomic_write(tmp_path / "x.bin", b"abc")
    assert sorted(os.listdir(tmp_path)) == ["x.bin"]


# --- config ---------------------------------------------------------------


def test_config_round_trip():
    cfg = SolverConfig(rank=4, seed=3, init_scale=0.25)
    back = formats.parse_config(formats.format_config(cfg))
    assert back == cfg
    assert formats.parse_config(formats.format_config(SolverConfig(rank=2))).init_scale is None


def test_config_missing_key_named():
    text = "".join(l + "\n" for l in formats.format_config(SolverConfig(rank=2)).splitlines() if not l.startswith("eta"))
    with pytest.raises(formats.ConfigError, match="'eta'"):
        formats.parse_config(text)


@pytest.mark.parametrize("extra", ["bogus = 1\n", "rank = 3\n", "just words\n"])
def test_config_rejects_bad_lines(extra):
    with pytest.raises(formats.ConfigError):
        formats.parse_config(formats.format_config(SolverConfig(rank=2)) + extra)


def test_config_comments_allowed():
    text = "# defaults\n" + formats.format_config(SolverConfig(rank=2)).replace("seed = 0", "seed = 9  # ours")
    assert formats.parse_config(text).seed == 9


# --- CLI ------------------------------------------------------------------


@pytest.fixture
def pipeline(tmp_path):
    d = tmp_path
    assert run("synth", "--p", 16, "--q", 16, "--n", 4, "--rank", 2, "--seed", 1,
               "--out-cube", d / "clean.hsc", "--out-factors", d / "truth.hsf") == 0
    assert run("degrade", "--in", d / "clean.hsc", "--kernel-size", 5, "--noise-sigma", 0.0,
               "--out-cube", d / "obs.hsc", "--out-kernels", d / "k.hsk") == 0
    return d


def _write_config(path, **kw):
    formats.atomic_write(path, formats.format_config(SolverConfig(**kw)).encode())


def test_synth_then_reconstruct_matches(pipeline):
    d = pipeline
    assert run("reconstruct", "--factors", d / "truth.hsf", "--out", d / "rec.hsc") == 0
    np.testing.assert_allclose(formats.read_cube(d / "rec.hsc").data, formats.read_cube(d / "clean.hsc").data, atol=1e-15)


def test_solve_from_truth_converges(pipeline, capsys):
    d = pipeline
    _write_config(d / "cfg.txt", rank=2, reg=formats.RegWeights(), max_iter=50)
    code = run("solve", "--observed", d / "obs.hsc", "--kernels", d / "k.hsk", "--config", d / "cfg.txt",
               "--out-factors", d / "est.hsf", "--report", d / "rep.csv", "--init-factors", d / "truth.hsf")
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["stop_reason"] == "converged"
    rows = list(csv.DictReader(open(d / "rep.csv")))
    assert list(rows[0]) == list(formats.REPORT_COLUMNS)
    objs = [float(r["objective"]) for r in rows]
    assert all(y <= x + 1e-12 for x, y in zip(objs, objs[1:]))


def test_solve_max_iter_exit_code(pipeline):
    d = pipeline
    _write_config(d / "cfg.txt", rank=2, max_iter=3, epsilon=1e-14)
    code = run("solve", "--observed", d / "obs.hsc", "--kernels", d / "k.hsk", "--config", d / "cfg.txt",
               "--out-factors", d / "est.hsf", "--report", d / "rep.csv")
    assert code == 4
    assert len(list(csv.DictReader(open(d / "rep.csv")))) == 3


def test_solve_dimension_mismatch_exit_code(pipeline):
    d = pipeline
    run("synth", "--p", 8, "--q", 8, "--n", 4, "--rank", 2, "--out-cube", d / "small.hsc")
    _write_config(d / "cfg.txt", rank=2, max_iter=2)
    code = run("solve", "--observed", d / "small.hsc", "--kernels", d / "k.hsk", "--config", d / "cfg.txt",
               "--out-factors", d / "est.hsf", "--report", d / "rep.csv")
    assert code == 3


def test_missing_file_exit_code(tmp_path):
    assert run("reconstruct", "--factors", tmp_path / "nope.hsf", "--out", tmp_path / "o.hsc") == 5


def test_usage_errors(tmp_path, pipeline):
    assert run("synth", "--p", 4, "--q", 4, "--n", 2, "--rank", 0, "--out-cube", tmp_path / "x.hsc") == 2
    assert run("degrade", "--in", pipeline / "clean.hsc", "--kernel-size", 4,
               "--out-cube", tmp_path / "o.hsc", "--out-kernels", tmp_path / "o.hsk") == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("rank = 2\n")
    assert run("solve", "--observed", pipeline / "obs.hsc", "--kernels", pipeline / "k.hsk", "--config", bad,
               "--out-factors", tmp_path / "e.hsf", "--report", tmp_path / "r.csv") == 2
    assert run("rank-sweep", "--clean", pipeline / "clean.hsc", "--config", bad, "--ranks", "1,x",
               "--out", tmp_path / "s.csv") == 2


def test_degrade_help_shows_defaults(capsys):
    assert run("degrade", "--help") == 0
    out = capsys.readouterr().out
    assert "default: 9" in out and "default: 2.0" in out and "default: 0.01" in out


def test_metrics(tmp_path, capsys):
    formats.write_cube(tmp_path / "a.hsc", HsiCube.zeros(4, 4, 2))
    formats.write_cube(tmp_path / "b.hsc", HsiCube(np.full((2, 4, 4), 0.1)))
    assert run("metrics", "--ref", tmp_path / "a.hsc", "--test", tmp_path / "b.hsc", "--rank", 3) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["psnr"] == pytest.approx(20.0, abs=1e-9)
    assert out["params"] == 30
    formats.write_cube(tmp_path / "c.hsc", HsiCube(np.full((2, 4, 4), 0.0274)))
    assert run("metrics", "--ref", tmp_path / "a.hsc", "--test", tmp_path / "c.hsc", "--table-units") == 0
    assert json.loads(capsys.readouterr().out)["rmse"] == pytest.approx(6.987, abs=1e-9)


def test_config_command(tmp_path):
    assert run("config", "--rank", 5, "--out", tmp_path / "c.txt") == 0
    assert formats.read_config(tmp_path / "c.txt") == SolverConfig(rank=5)


def test_rank_sweep_command(pipeline):
    d = pipeline
    _write_config(d / "cfg.txt", rank=1, max_iter=5)
    assert run("rank-sweep", "--clean", d / "clean.hsc", "--config", d / "cfg.txt", "--ranks", "1,3",
               "--kernel-size", 3, "--out", d / "sweep.csv") == 0
    rows = list(csv.DictReader(open(d / "sweep.csv")))
    assert [int(r["rank"]) for r in rows] == [1, 3]
    assert [int(r["parameter_count"]) for r in rows] == [36, 108]


def test_cli_outputs_byte_identical(tmp_path):
    hashes = []
    for run_dir in ("r1", "r2"):
        d = tmp_path / run_dir
        d.mkdir()
        run("synth", "--p", 12, "--q", 12, "--n", 3, "--rank", 2, "--seed", 4, "--out-cube", d / "c.hsc", "--out-factors", d / "f.hsf")
        run("degrade", "--in", d / "c.hsc", "--kernel-size", 3, "--seed", 2, "--out-cube", d / "o.hsc", "--out-kernels", d / "k.hsk")
        _write_config(d / "cfg.txt", rank=2, max_iter=20)
        run("solve", "--observed", d / "o.hsc", "--kernels", d / "k.hsk", "--config", d / "cfg.txt",
            "--out-factors", d / "e.hsf", "--report", d / "r.csv")
        hashes.append([sha(d / n) for n in ("c.hsc", "f.hsf", "o.hsc", "k.hsk", "e.hsf", "r.csv")])
    assert hashes[0] == hashes[1]
