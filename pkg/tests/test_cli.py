"""End-to-end command line tests.

Everything runs in-process through cli.main except one subprocess check of
the installed console script.  Output files are parsed back and the
determinism contract (same configuration, same bytes) is exercised on the
delimited outputs.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from scattergate import __version__
from scattergate.cli import main, parse_grid
from scattergate.errors import ConfigError
from scattergate.graphs import ScatterGraph, build_momentum_switch, save_graph
from scattergate.reporting import sha256_file
from scattergate.twoparticle import minimum_collision_sites

THETA_J2 = 1.9106332362490186
PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def read_csv(path):
    meta = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    i = 0
    while lines[i].startswith("# "):
        key, _, val = lines[i][2:].partition(": ")
        meta[key] = val
        i += 1
    header = lines[i].split(",")
    rows = [line.split(",") for line in lines[i + 1:]]
    return meta, header, rows


def read_json(path):
    doc = json.loads(path.read_text(encoding="utf-8"))
    return doc["metadata"], doc["result"]


# ---------------------------------------------------------------------------
# grids and wiring


def test_parse_grid_forms():
    np.testing.assert_allclose(parse_grid("0:1:5"), [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(parse_grid("1, 2,3.5"), [1.0, 2.0, 3.5])
    np.testing.assert_allclose(parse_grid("2.5"), [2.5])


@pytest.mark.parametrize("text", ["1:2", "a:b:c", "0:1:0", "", " , ", "x,y"])
def test_parse_grid_rejects(text):
    with pytest.raises(ConfigError):
        parse_grid(text)


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "scattergate.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.strip() == __version__


# ---------------------------------------------------------------------------
# switch certification


def test_switch_verify_stdout(capsys):
    assert main(["switch-verify"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["metadata"]["subcommand"] == "switch-verify"
    assert doc["metadata"]["graph_file"] == "bundled"
    assert doc["result"]["certified"] is True
    assert doc["result"]["unitarity_defect"] < 1e-10
    assert max(doc["result"]["route_transmission_defects"]) < 1e-10


def test_switch_verify_graph_file_and_hash(tmp_path):
    gpath = tmp_path / "switch.json"
    save_graph(build_momentum_switch(), gpath)
    out = tmp_path / "report.json"
    assert main(["switch-verify", "--graph", str(gpath),
                 "--output", str(out), "--no-figure"]) == 0
    meta, result = read_json(out)
    assert result["certified"] is True
    assert meta["graph_sha256"] == sha256_file(gpath)
    assert meta["graph_file"] == str(gpath)


def test_switch_verify_rejects_non_switch(tmp_path):
    star = ScatterGraph(num_vertices=4, edges=((0, 1), (0, 2), (0, 3)),
                        terminals=(1, 2, 3))
    gpath = tmp_path / "star.json"
    save_graph(star, gpath)
    out = tmp_path / "report.json"
    assert main(["switch-verify", "--graph", str(gpath),
                 "--output", str(out)]) == 3
    _, result = read_json(out)
    assert result["certified"] is False


def test_missing_graph_file_is_config_error(tmp_path, capsys):
    assert main(["scatter-1p", "--k", "0.5",
                 "--graph", str(tmp_path / "nope.json")]) == 2
    assert capsys.readouterr().err.startswith("error:")


# ---------------------------------------------------------------------------
# sweeps


def test_scatter_1p_csv_and_figure(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["scatter-1p", "--k", "0.5,1.5",
                 "--output", str(out)]) == 0
    meta, header, rows = read_csv(out)
    assert header == ["k", "terminal_in", "terminal_out", "re", "im", "abs2"]
    assert len(rows) == 2 * 3 * 3
    assert meta["k_grid"] == "0.5,1.5"
    assert meta["terminals"] == "3"
    # each S-matrix column sums to 1
    for k in ("0.5", "1.5"):
        for t_in in ("0", "1", "2"):
            total = sum(float(r[5]) for r in rows
                        if r[0] == k and r[1] == t_in)
            assert total == pytest.approx(1.0, abs=1e-10)
    fig = tmp_path / "sweep.png"
    assert fig.read_bytes()[:8] == PNG_MAGIC


def test_scatter_1p_threads_same_rows(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["scatter-1p", "--k", "0.3:1.4:5", "--output", str(a),
                 "--no-figure"]) == 0
    assert main(["scatter-1p", "--k", "0.3:1.4:5", "--output", str(b),
                 "--no-figure", "--threads", "4"]) == 0
    assert not (tmp_path / "a.png").exists()
    _, _, rows_a = read_csv(a)
    _, _, rows_b = read_csv(b)
    assert rows_a == rows_b


def test_phase_curve_matches_closed_form(tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["phase-curve", "--model", "tj", "--grid", "0:4:9",
                 "--output", str(out)]) == 0
    meta, header, rows = read_csv(out)
    assert header == ["coupling", "theta_unwrapped", "re_R", "im_R"]
    assert len(rows) == 9
    assert meta["model"] == "tj"
    thetas = [float(r[1]) for r in rows]
    for r in rows:
        amp = complex(float(r[2]), float(r[3]))
        assert abs(amp) == pytest.approx(1.0, abs=1e-12)
        assert abs(amp - np.exp(1j * float(r[1]))) < 1e-10
    # unwrapped curve is continuous
    assert max(abs(b - a) for a, b in zip(thetas, thetas[1:])) < math.pi
    j2 = rows[4]
    assert float(j2[0]) == 2.0
    amp = complex(float(j2[2]), float(j2[3]))
    assert abs(amp - np.exp(1j * THETA_J2)) < 1e-12


def test_phase_curve_rejects_xxz(capsys):
    assert main(["phase-curve", "--model", "xxz", "--Jx", "1", "--Jz", "1",
                 "--grid", "0:1:3"]) == 2
    assert "scalar coupling" in capsys.readouterr().err


def test_missing_coupling_is_config_error(capsys):
    assert main(["scatter-2p", "--model", "tj", "--width", "4",
                 "--sites", "80"]) == 2
    assert "needs --J" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# collisions


def test_scatter_2p_run_and_determinism(tmp_path):
    args = ["scatter-2p", "--model", "tj", "--J", "2", "--width", "8",
            "--sites", "160"]
    out1 = tmp_path / "one.csv"
    out2 = tmp_path / "two.csv"
    assert main(args + ["--output", str(out1)]) == 0
    assert main(args + ["--output", str(out2), "--no-figure"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert (tmp_path / "one.png").read_bytes()[:8] == PNG_MAGIC
    assert not (tmp_path / "two.png").exists()

    meta, header, rows = read_csv(out1)
    assert header == ["channel", "theta", "closed_form", "circle_error",
                      "overlap"]
    assert len(rows) == 1 and rows[0][0] == "S"
    assert float(rows[0][2]) == pytest.approx(THETA_J2, abs=1e-12)
    assert float(rows[0][3]) < 0.35
    assert float(rows[0][4]) > 0.5
    assert meta["J"] == "2.0"
    assert float(meta["p2"]) == pytest.approx(-math.pi / 8, abs=1e-12)
    assert float(meta["residual_proximity"]) < 0.05


def test_scatter_2p_unreliable_phase_is_exit_3(capsys):
    assert main(["scatter-2p", "--model", "tj", "--J", "2", "--width", "4",
                 "--sites", "80"]) == 3
    assert capsys.readouterr().err.startswith("numerical failure:")


def test_scaling_study_free_model(tmp_path):
    out = tmp_path / "scaling.csv"
    assert main(["scaling-study", "--model", "tj", "--J", "0",
                 "--widths", "4,6", "--output", str(out)]) == 0
    _, header, rows = read_csv(out)
    assert header == ["width", "sites", "theta", "closed_form",
                      "circle_error", "overlap"]
    assert [int(r[0]) for r in rows] == [4, 6]
    assert [int(r[1]) for r in rows] == [
        max(16 * 4, minimum_collision_sites(4)),
        max(16 * 6, minimum_collision_sites(6))]
    # a free collision has no phase error at any width
    assert all(float(r[4]) < 1e-9 for r in rows)
    assert all(float(r[5]) > 1 - 1e-9 for r in rows)
    assert (tmp_path / "scaling.png").read_bytes()[:8] == PNG_MAGIC


def test_simulate_g_reports_staging_errors(capsys):
    assert main(["simulate-G", "--model", "tj", "--J", "2", "--width", "16",
                 "--line-len", "64"]) == 2
    assert "too short" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# synthesis, schedules, readout


def test_synth_frozen_plan(tmp_path):
    theta = repr(math.pi * (math.sqrt(5.0) - 1.0) / 2.0)
    args = ["synth", "--theta", theta, "--gamma-t", "2.31",
            "--epsilon", "0.001"]
    out1 = tmp_path / "plan.json"
    out2 = tmp_path / "again.json"
    assert main(args + ["--output", str(out1)]) == 0
    assert main(args + ["--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert not (tmp_path / "plan.png").exists()   # no figure for a plan
    meta, result = read_json(out1)
    assert result["k"] == 342
    assert result["achieved_error"] == pytest.approx(1.4932667349109024e-4,
                                                     rel=1e-9)
    assert result["suitable"] is True
    assert result["resolution_bound"] == pytest.approx(1.3931674738757397e-3,
                                                       rel=1e-9)
    assert meta["epsilon"] == 0.001
    assert meta["cap"] == 10 ** 7


def test_synth_unreachable_is_exit_3(capsys):
    assert main(["synth", "--theta", repr(math.pi / 4), "--gamma-t", "1.0",
                 "--epsilon", "1e-6"]) == 3
    assert "numerical failure:" in capsys.readouterr().err


def test_cnot_sim_schedule_run(tmp_path):
    sched = {"provenance": "cli test",
             "steps": [{"pair": [0, 1], "gamma_t": math.pi / 2},
                       {"pair": [1, 2], "gamma_t": math.pi / 4}]}
    spath = tmp_path / "sched.json"
    spath.write_text(json.dumps(sched), encoding="utf-8")
    out = tmp_path / "cnot.json"
    assert main(["cnot-sim", "--schedule", str(spath), "--epsilon", "0.001",
                 "--n-logical", "1", "--output", str(out)]) == 0
    meta, result = read_json(out)
    assert result["per_step_k"] == [1938, 969]
    assert result["max_element_error"] == pytest.approx(2.825477641681162e-4,
                                                        rel=1e-9)
    assert max(result["per_step_error"]) <= 0.001
    assert result["leakage"] < 1e-12
    assert result["exact_leakage"] < 1e-12
    assert "cnot_element_error" not in result      # only reported for n = 2
    assert meta["schedule_sha256"] == sha256_file(spath)
    assert meta["steps"] == 2
    assert (tmp_path / "cnot.png").read_bytes()[:8] == PNG_MAGIC


def test_cnot_sim_missing_schedule(tmp_path, capsys):
    assert main(["cnot-sim", "--schedule", str(tmp_path / "none.json"),
                 "--epsilon", "0.001"]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_measure_frozen_counts(tmp_path):
    args = ["measure", "--state", "1L", "--shots", "1000000", "--seed", "42"]
    out1 = tmp_path / "m1.json"
    out2 = tmp_path / "m2.json"
    assert main(args + ["--output", str(out1)]) == 0
    assert main(args + ["--output", str(out2), "--no-figure"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert (tmp_path / "m1.png").read_bytes()[:8] == PNG_MAGIC
    meta, result = read_json(out1)
    assert result["p_down_exact"] == pytest.approx(2 / 3, abs=1e-12)
    assert result["n_down"] == 667545
    assert result["n_up"] == 1000000 - 667545
    assert result["frequency"] == pytest.approx(0.667545, abs=1e-12)
    assert result["majority_vote_error"] == pytest.approx(
        7.612716957371987e-15, rel=1e-9)
    assert meta["seed"] == 42


def test_measure_logical_zero(capsys):
    assert main(["measure", "--state", "0L"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["p_down_exact"] == 0.0
    assert doc["result"]["n_down"] == 0
    assert doc["result"]["frequency"] is None
    assert doc["result"]["majority_vote_error"] == 0.0
