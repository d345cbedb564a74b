import json

import numpy as np
import pytest

from nlspectra.cli import main

DELTA_MODEL = '{"kind":"sparse_biased","eta":{"kind":"point_mass","c":1.0},"p":0.1,"beta":1.5}'
TANH = '{"family":"tanh","params":{"a":1.7,"b":0.58}}'
ZERO = '{"family":"zero","params":{}}'


def run(args):
    return main(args)


def test_threshold_json(tmp_path):
    out = tmp_path / "th.json"
    assert run(["threshold", "--sigma", ZERO, "--model", DELTA_MODEL, "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["beta_star"] == pytest.approx(1.0, abs=1e-6)
    assert obj["meta"]["tool"] == "nl-spectra"


def test_simulate_small(tmp_path):
    out = tmp_path / "sim.json"
    rc = run(["simulate", "--model", DELTA_MODEL, "--sigma", TANH, "--n", "50", "--seed", "3", "--out", str(out)])
    assert rc == 0
    obj = json.loads(out.read_text())
    assert len(obj["eigenvalues"]) == 49  # compressed by default
    assert obj["lambda1"] == obj["eigenvalues"][0]
    assert 0 <= obj["overlap"] <= 1


def test_simulate_planted_clique(tmp_path):
    out = tmp_path / "clique.json"
    rc = run([
        "simulate", "--model", '{"kind":"planted_clique","beta":1.0}',
        "--n", "49", "--seed", "1", "--no-compressed", "--out", str(out),
    ])
    assert rc == 0
    obj = json.loads(out.read_text())
    assert len(obj["eigenvalues"]) == 49


def test_density_csv(tmp_path):
    out = tmp_path / "rho.csv"
    rc = run(["density", "--sigma", ZERO, "--grid=-1.0:1.0:0.5", "--eps", "1e-3", "--out", str(out)])
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "x,density,converged"
    rows = [l.split(",") for l in lines[1:]]
    assert len(rows) == 5
    mid = [r for r in rows if float(r[0]) == 0.0][0]
    assert float(mid[1]) == pytest.approx(1 / np.pi, abs=1e-3)


def test_sweep_from_config(tmp_path):
    config = tmp_path / "sweep.ini"
    config.write_text(
        "\n".join([
            "[sweep]",
            "n = 40",
            "trials = 2",
            "seed = 9",
            "beta_grid = 0.0,1.5",
            "statistics = lambda1_L, overlap",
            "p_rule = submatrix",
            "",
            "[model]",
            "eta = point_mass",
            "eta_c = 1.0",
            "p = 0.1",
            "",
            "[sigma]",
            'descriptor = {"family": "zero", "params": {}}',
        ])
    )
    out = tmp_path / "sweep.csv"
    assert run(["sweep", "--config", str(config), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    header_idx = next(i for i, l in enumerate(lines) if not l.startswith("#"))
    assert lines[header_idx].startswith("beta,lambda1_L_mean")
    assert any(l.startswith("# config.sweep.n = 40") for l in lines[:header_idx])
    assert len(lines) == header_idx + 3  # header + two beta rows


def test_optimize_json(tmp_path):
    out = tmp_path / "opt.json"
    rc = run([
        "optimize", "--family", "tanh", "--model", DELTA_MODEL,
        "--max-evals", "40", "--seed", "1", "--out", str(out),
    ])
    assert rc == 0
    obj = json.loads(out.read_text())
    assert obj["params"]["family"] == "tanh"
    assert obj["beta_star"] < 1.0
    assert obj["evals"] <= 44  # budget plus an in-flight iteration


def test_transfer_csv(tmp_path):
    out = tmp_path / "transfer.csv"
    rc = run([
        "transfer",
        "--sigma", ZERO,
        "--model", DELTA_MODEL,
        "--model", '{"kind":"sparse_biased","eta":{"kind":"half_normal"},"p":0.1}',
        "--out", str(out),
    ])
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].startswith("sigma,")
    values = lines[1].split(",")[1:]
    assert all(float(v) == pytest.approx(1.0, abs=1e-6) for v in values)


def test_detect_json(tmp_path):
    out = tmp_path / "det.json"
    rc = run([
        "detect", "--model", DELTA_MODEL, "--sigma", ZERO,
        "--n", "60", "--tau", "2.05", "--trials", "4", "--seed", "2", "--out", str(out),
    ])
    assert rc == 0
    obj = json.loads(out.read_text())
    assert set(obj) >= {"type_i", "type_ii", "total_error", "null_stats", "alt_stats"}
    assert len(obj["null_stats"]) == 4


def test_heatmap_csv(tmp_path):
    out = tmp_path / "heat.csv"
    rc = run([
        "heatmap", "--family", "tanh", "--model", DELTA_MODEL,
        "--grid-x", "a:1.0:2.0:2", "--grid-y", "b:0.5:0.7:2", "--out", str(out),
    ])
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].startswith("b\\a,")
    assert len(lines) == 3


def test_spectrum_csv(tmp_path):
    out = tmp_path / "spectrum.csv"
    rc = run([
        "spectrum", "--model", DELTA_MODEL, "--sigma", TANH,
        "--n", "80", "--seed", "4", "--bins", "20", "--out", str(out),
    ])
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "bin_left,bin_right,hist_density,curve_x,curve_density"


def test_sigma_descriptor_from_file(tmp_path):
    sigma_file = tmp_path / "sigma.json"
    sigma_file.write_text(TANH)
    out = tmp_path / "th.json"
    rc = run(["threshold", "--sigma", f"@{sigma_file}", "--model", DELTA_MODEL, "--out", str(out)])
    assert rc == 0
    assert json.loads(out.read_text())["beta_star"] < 1.0
