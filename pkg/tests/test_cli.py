import json

import numpy as np
import pytest

from dfdreg.cli import main
from dfdreg.grid import Grid
from dfdreg.io import load_gridfunction, save_gridfunction


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["heat", "build-dfd", "--gamma", "0.5", "--n", "1024", "--L", "8", "--j-max", "3",
                 "--output", str(d / "wvd.npz")]) == 0
    g = Grid(1024, 8.0)
    x = g.random(np.random.default_rng(0), g.mask(hi=2.0 ** 4 * 2 * np.pi / 3))
    save_gridfunction(d / "x.npz", x)
    return d


def test_filters_check(capsys):
    code, rep = run(capsys, "filters", "check", "--filter", "tikhonov", "--phi", "poly:p=2")
    assert code == 0 and rep["passed"] and rep["morozov_ready"]
    assert abs(rep["A2"]["gamma1"] - 0.5) <= 1e-6


def test_frames_inspect(capsys, built):
    code, rep = run(capsys, "frames", "inspect", built / "wvd.npz")
    assert code == 0 and rep["tight"] and rep["parseval_defect"] <= 1e-12
    code, rep = run(capsys, "frames", "inspect", built / "wvd.npz", "--which", "v")
    assert not rep["tight"] and rep["bound_upper"] > 1


def test_heat_forward_then_solve(capsys, built):
    code, _ = run(capsys, "heat", "forward", "--gamma", "0.5", "--input", built / "x.npz",
                  "--output", built / "y.npz")
    assert code == 0
    code, rep = run(capsys, "dfd", "solve", built / "wvd.npz", "--data", built / "y.npz",
                    "--output", built / "xs.npz")
    x, _ = load_gridfunction(built / "x.npz")
    xs, extra = load_gridfunction(built / "xs.npz")
    assert (xs - x).norm() <= 1e-8 * x.norm() and extra["method"] == "picard"


def test_dfd_verify(capsys, built):
    code, rep = run(capsys, "dfd", "verify", built / "wvd.npz")
    assert code == 0 and rep["passed"]


def test_regularize_and_params(capsys, built):
    run(capsys, "heat", "forward", "--input", built / "x.npz", "--output", built / "y2.npz")
    code, rep = run(capsys, "param", "morozov", built / "wvd.npz", "--data", built / "y2.npz",
                    "--delta", "1e-5")
    assert code == 0 and rep["residual"] <= 1e-10
    code, rep = run(capsys, "dfd", "regularize", built / "wvd.npz", "--data", built / "y2.npz",
                    "--alpha", rep["alpha"], "--output", built / "xr.npz", "--delta", "1e-5")
    assert code == 0 and rep["delta"] == 1e-5
    code, rep = run(capsys, "param", "apriori", "--delta", "1e-3", "--E", "1", "--phi", "poly:p=4")
    assert rep["alpha"] == pytest.approx(1e-2)


def test_analysis_commands(capsys, built):
    code, rep = run(capsys, "analysis", "lowerbound", "--delta", "1e-2", "--beta", "0.5")
    assert rep["lower_bound"] == pytest.approx(0.5 * 0.1)
    code, rep = run(capsys, "analysis", "density", "--delta-stars", "1,0.0625,0.00390625",
                    "--beta", "0.0625", "--delta0", "1")
    assert code == 0 and rep["covered"]
    code, rep = run(capsys, "analysis", "density", "--delta-stars", "1,0.0625,0.00390625",
                    "--beta", "0.25", "--delta0", "1")
    assert code == 1 and rep["gaps"]
    code, rep = run(capsys, "analysis", "density", "--system", built / "wvd.npz", "--beta", "0.0625",
                    "--delta0", "0.5")
    assert code == 0


def test_bench_toy_and_run(capsys, tmp_path):
    code, rep = run(capsys, "bench", "toy", "--quick", "--out-dir", tmp_path)
    assert code == 0 and rep["pass_flags"]["runtime"]
    assert (tmp_path / "toy_quick.csv").exists()
    cfg = tmp_path / "c.toml"
    cfg.write_text('problem = "toy"\nphi = "poly:p=2"\nn = 128\nL = 6.283185307179586\nE = 1.0\n'
                   'delta_max = 1e-2\ndelta_min = 1e-4\ndelta_points = 4\nnoise_draws = 3\nname = "mini"\n')
    code, rep = run(capsys, "bench", "run", "--config", cfg, "--out-dir", tmp_path)
    assert (tmp_path / "mini.json").exists() and code in (0, 1)
