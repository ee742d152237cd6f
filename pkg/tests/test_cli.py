import csv
import json
import math

import numpy as np
import pytest

from windingrmt.cli import main


def run_cli(args):
    return main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_distribution_analytic_only(tmp_path):
    out = tmp_path / "dist.csv"
    assert run_cli(["distribution", "--n", 2, "--analytic-only", "--out", out]) == 0
    header, rows = read_csv(out)
    assert header == ["W", "p_analytic", "p_empirical", "stderr", "gaussian_approx"]
    assert [r[0] for r in rows] == ["-2", "0", "2"]
    assert [float(r[1]) for r in rows] == pytest.approx([3 / 16, 10 / 16, 3 / 16])
    assert all(r[2] == "" and r[3] == "" for r in rows)
    sidecar = json.loads((tmp_path / "dist.json").read_text())
    assert sidecar["summary"]["variance_analytic"] == pytest.approx(1.5)
    assert sidecar["summary"]["rejection_count"] == 0


def test_distribution_with_sampling_row_structure(tmp_path):
    out = tmp_path / "d4.csv"
    assert run_cli(["distribution", "--n", 4, "--samples", 3000, "--seed", 7, "--out", out]) == 0
    header, rows = read_csv(out)
    assert [r[0] for r in rows] == ["-4", "-2", "0", "2", "4"]
    empirical = np.array([float(r[2]) for r in rows])
    assert empirical.sum() == pytest.approx(1.0, abs=1e-12)
    sidecar = json.loads((tmp_path / "d4.json").read_text())
    assert sidecar["summary"]["N"] == 4
    assert sidecar["summary"]["variance_empirical"] > 0


def test_distribution_zero_samples_is_usage_error(tmp_path):
    assert run_cli(["distribution", "--n", 1, "--samples", 0, "--out", tmp_path / "x.csv"]) == 2


def test_distribution_unknown_flag_exits_2():
    assert run_cli(["distribution", "--does-not-exist"]) == 2


def test_missing_subcommand_exits_2():
    assert run_cli([]) == 2


def test_distribution_byte_identical_and_replayable(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["distribution", "--n", 3, "--samples", 800, "--seed", 21]
    assert run_cli(args + ["--out", out1]) == 0
    assert run_cli(args + ["--out", out2]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    # replay from the sidecar alone
    out3 = tmp_path / "c.csv"
    assert run_cli(["distribution", "--config", tmp_path / "a.json", "--out", out3]) == 0
    assert out3.read_bytes() == out1.read_bytes()


def test_distribution_numerical_failure_exit_code(tmp_path):
    code = run_cli(
        ["distribution", "--n", 4, "--samples", 50, "--seed", 3,
         "--condition-threshold", 1.000001, "--out", tmp_path / "x.csv"]
    )
    assert code == 3


def test_corr_analytic_quarter_separation(tmp_path):
    out = tmp_path / "corr.csv"
    assert run_cli(
        ["corr", "--n", 4, "--k", 2, "--sep", 1.5707963, "--analytic-only", "--out", out]
    ) == 0
    header, rows = read_csv(out)
    assert header == ["p1", "p2", "analytic", "mc_mean_re", "mc_mean_im", "stderr"]
    assert float(rows[0][2]) == pytest.approx(-1.0, abs=1e-9)


def test_corr_single_dimension_constant(tmp_path):
    out = tmp_path / "corr1.csv"
    assert run_cli(["corr", "--n", 1, "--k", 2, "--sep", 0.3, "--analytic-only", "--out", out]) == 0
    _, rows = read_csv(out)
    assert float(rows[0][2]) == pytest.approx(-1.0, rel=1e-12)


def test_corr_three_point_analytic_populated(tmp_path):
    out = tmp_path / "corr3.csv"
    assert run_cli(
        ["corr", "--n", 4, "--k", 3, "--points", "0.4,1.3,2.1", "--analytic-only", "--out", out]
    ) == 0
    header, rows = read_csv(out)
    assert header[:3] == ["p1", "p2", "p3"]
    assert rows[0][3] != ""
    assert abs(float(rows[0][3])) < 1e-9


def test_corr_with_sampling(tmp_path):
    out = tmp_path / "corrmc.csv"
    assert run_cli(
        ["corr", "--n", 3, "--k", 1, "--p", 0.7, "--samples", 4000, "--seed", 2, "--out", out]
    ) == 0
    _, rows = read_csv(out)
    mean_re, stderr = float(rows[0][2]), float(rows[0][4])
    assert abs(mean_re) < 4 * stderr


def test_corr_order_cap(tmp_path):
    assert run_cli(["corr", "--n", 4, "--k", 4, "--out", tmp_path / "x.csv"]) == 2


def test_corr_replay_from_sidecar(tmp_path):
    out1, out2 = tmp_path / "c1.csv", tmp_path / "c2.csv"
    assert run_cli(
        ["corr", "--n", 3, "--k", 2, "--sep", 0.8, "--samples", 500, "--seed", 5, "--out", out1]
    ) == 0
    assert run_cli(["corr", "--config", tmp_path / "c1.json", "--out", out2]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_unfold_fixed_values(tmp_path):
    out = tmp_path / "unfold.csv"
    assert run_cli(
        ["unfold", "--alpha", 0.5, "--n-list", "100", "--psi-grid", "1.0", "--out", out]
    ) == 0
    header, rows = read_csv(out)
    assert header == ["alpha", "N", "psi_delta", "rescaled_c2", "f2_limit"]
    assert float(rows[0][3]) == pytest.approx(-(1 - math.exp(-1.0)), abs=0.02)
    assert float(rows[0][4]) == pytest.approx(-(1 - math.exp(-1.0)), rel=1e-12)


def test_unfold_default_dimension_lists(tmp_path):
    out = tmp_path / "f1a.csv"
    assert run_cli(["unfold", "--alpha", str(1 / 6), "--psi-grid", "2.0", "--out", out]) == 0
    _, rows = read_csv(out)
    assert [int(r[1]) for r in rows] == [5, 10, 20, 50, 100, 150, 200, 300, 1000]
    out_b = tmp_path / "f1b.csv"
    assert run_cli(["unfold", "--alpha", 0.5, "--psi-grid", "1.0", "--out", out_b]) == 0
    _, rows_b = read_csv(out_b)
    assert [int(r[1]) for r in rows_b] == [2, 5, 7, 10, 15, 20, 50, 100]


def test_unfold_large_alpha_limit_zero(tmp_path):
    out = tmp_path / "a2.csv"
    assert run_cli(["unfold", "--alpha", 2.0, "--n-list", "10,100", "--psi-grid", "1.0", "--out", out]) == 0
    _, rows = read_csv(out)
    assert all(float(r[4]) == 0.0 for r in rows)


def test_unfold_rejects_nonpositive_alpha(tmp_path):
    assert run_cli(["unfold", "--alpha", -1.0, "--out", tmp_path / "x.csv"]) == 2


def test_moments_table(tmp_path):
    out = tmp_path / "mom.csv"
    assert run_cli(["moments", "--n-max", 4, "--out", out]) == 0
    header, rows = read_csv(out)
    assert header == ["N", "variance_analytic", "variance_quadrature", "asymptotic_2sqrtNpi"]
    assert float(rows[0][1]) == pytest.approx(1.0)
    assert float(rows[0][2]) == pytest.approx(1.0, abs=1e-9)
    assert float(rows[1][1]) == pytest.approx(1.5)
    assert float(rows[3][3]) == pytest.approx(2 * math.sqrt(4 / math.pi), rel=1e-12)


def test_density_trace_fixed_field(tmp_path):
    out = tmp_path / "trace.csv"
    assert run_cli(["density-trace", "--debug-fixed-field", "--grid-size", 64, "--out", out]) == 0
    header, rows = read_csv(out)
    assert header == ["p", "re_w", "im_w"]
    assert len(rows) == 64
    assert all(float(r[2]) == pytest.approx(2.0, abs=1e-12) for r in rows)
    sidecar = json.loads((tmp_path / "trace.json").read_text())
    assert sidecar["summary"]["W_count"] == 2
    assert sidecar["summary"]["W_contour"] == 2


def test_density_trace_trapezoid_matches_sidecar(tmp_path):
    out = tmp_path / "t2.csv"
    assert run_cli(["density-trace", "--n", 3, "--seed", 12, "--grid-size", 512, "--out", out]) == 0
    _, rows = read_csv(out)
    w_vals = np.array([complex(float(r[1]), float(r[2])) for r in rows])
    integral = w_vals.sum() * (2 * math.pi / len(rows)) / (2j * math.pi)
    sidecar = json.loads((tmp_path / "t2.json").read_text())
    assert abs(integral - sidecar["summary"]["W_count"]) < 1e-3
    assert sidecar["summary"]["W_count"] == sidecar["summary"]["W_contour"]


def test_density_trace_grid_floor(tmp_path):
    assert run_cli(["density-trace", "--grid-size", 8, "--out", tmp_path / "x.csv"]) == 2


def test_density_trace_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run_cli(["density-trace", "--n", 2, "--seed", 33, "--grid-size", 32, "--out", out]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_workers_env_override(tmp_path, monkeypatch):
    out1 = tmp_path / "w1.csv"
    out2 = tmp_path / "w2.csv"
    assert run_cli(["distribution", "--n", 2, "--samples", 600, "--seed", 4, "--out", out1]) == 0
    monkeypatch.setenv("WINDINGRMT_WORKERS", "2")
    assert run_cli(["distribution", "--n", 2, "--samples", 600, "--seed", 4, "--out", out2]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    sidecar = json.loads((tmp_path / "w2.json").read_text())
    assert sidecar["config"]["workers"] == 2


def test_config_round_trip(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"n": 2, "samples": 500, "seed": 6}))
    out = tmp_path / "r.csv"
    assert run_cli(["distribution", "--config", cfg_path, "--out", out]) == 0
    sidecar = json.loads((tmp_path / "r.json").read_text())
    assert sidecar["config"]["n"] == 2
    assert sidecar["config"]["samples"] == 500
    assert sidecar["config"]["seed"] == 6
    # flags override the file
    out2 = tmp_path / "r2.csv"
    assert run_cli(["distribution", "--config", cfg_path, "--seed", 8, "--out", out2]) == 0
    assert json.loads((tmp_path / "r2.json").read_text())["config"]["seed"] == 8


def test_config_rejects_unknown_keys(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"bogus": 1}))
    assert run_cli(["distribution", "--config", cfg_path, "--out", tmp_path / "x.csv"]) == 2
