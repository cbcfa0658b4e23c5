import math
import os

import pytest

from tfac import cli


def run_main(argv):
    return cli.main(argv)


# -- config files ------------------------------------------------------------

def test_parse_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("alpha = 0.7\n# comment\nN = 8,16\n\nseed=5 # trailing\n")
    cfg = cli.parse_config_file(p)
    assert cfg == {"alpha": "0.7", "N": "8,16", "seed": "5"}


def test_parse_config_file_rejects_garbage(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("alpha 0.7\n")
    with pytest.raises(ValueError):
        cli.parse_config_file(p)


def test_config_merge_priority(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("alpha = 0.9\nT = 0.02\n")
    args = cli.build_parser().parse_args(
        ["coarsen", "--config", str(p), "--alpha", "0.4"]
    )
    cfg = cli._merge(args, cli.COARSEN_DEFAULTS)
    assert cfg["alpha"] == 0.4      # CLI wins
    assert cfg["T"] == "0.02"       # file beats default
    assert cfg["eta"] == 1e3        # default survives


def test_config_unknown_key(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("bogus = 1\n")
    args = cli.build_parser().parse_args(["coarsen", "--config", str(p)])
    with pytest.raises(SystemExit):
        cli._merge(args, cli.COARSEN_DEFAULTS)


# -- converge ------------------------------------------------------------------

def small_converge_cfg(tmp_path, **over):
    cfg = dict(cli.CONVERGE_DEFAULTS)
    cfg.update(
        grid=16, N="8,16", gamma="4", ref_N=128, ref_gamma=6.0,
        out=str(tmp_path / "conv"), seed=77,
    )
    cfg.update(over)
    return cfg


def test_converge_structure_and_determinism(tmp_path):
    logs = []
    cfg = small_converge_cfg(tmp_path)
    rows, violations = cli.converge_experiment(cfg, log=logs.append)
    assert violations == 0
    assert [r["N"] for r in rows] == [8, 16]
    assert rows[0]["error"] > 0 and math.isfinite(rows[0]["error"])
    assert math.isnan(rows[0]["order"]) and math.isfinite(rows[1]["order"])
    csv_path = os.path.join(cfg["out"], "converge_a0.4_g4.csv")
    first = open(csv_path).read()
    assert first.splitlines()[0] == "N,tau_max,error,order"
    cli.converge_experiment(cfg, log=logs.append)
    assert open(csv_path).read() == first  # byte-stable rerun


def test_converge_graded_mesh_mode(tmp_path):
    cfg = small_converge_cfg(tmp_path, mesh="graded")
    rows, _ = cli.converge_experiment(cfg, log=lambda *_: None)
    assert rows[1]["error"] < rows[0]["error"]


def test_converge_cli_exit_code(tmp_path):
    assert run_main([
        "converge", "--grid", "16", "--N", "8,16", "--gamma", "4",
        "--ref-N", "64", "--out", str(tmp_path / "c"), "--seed", "3",
    ]) == 0


# -- coarsen --------------------------------------------------------------------

def small_coarsen_cfg(tmp_path, **over):
    cfg = dict(cli.COARSEN_DEFAULTS)
    cfg.update(grid=16, T=0.05, N0=6, snapshots="0.02", out=str(tmp_path / "coarsen"), seed=9)
    cfg.update(over)
    return cfg


def test_coarsen_outputs_and_determinism(tmp_path):
    cfg = small_coarsen_cfg(tmp_path)
    result = cli.coarsen_experiment(cfg, log=lambda *_: None)
    out = cfg["out"]
    records = open(os.path.join(out, "records.csv")).read()
    mesh_csv = open(os.path.join(out, "mesh.csv")).read()
    assert os.path.exists(os.path.join(out, "snapshot_t0.02.dat"))
    assert result.violation_count == 0
    assert result.mesh.nodes[-1] == 0.05

    cfg2 = small_coarsen_cfg(tmp_path, out=str(tmp_path / "again"))
    cli.coarsen_experiment(cfg2, log=lambda *_: None)
    assert open(os.path.join(cfg2["out"], "records.csv")).read() == records
    assert open(os.path.join(cfg2["out"], "mesh.csv")).read() == mesh_csv


def test_coarsen_graded_only_when_T_equals_T0(tmp_path):
    cfg = small_coarsen_cfg(tmp_path, T=0.01, snapshots="")
    result = cli.coarsen_experiment(cfg, log=lambda *_: None)
    assert result.mesh.N == 6  # exactly N0 steps


def test_coarsen_cli_exit_code(tmp_path):
    assert run_main([
        "coarsen", "--grid", "16", "--T", "0.02", "--N0", "4",
        "--snapshots", "", "--out", str(tmp_path / "cc"), "--seed", "4",
    ]) == 0


# -- kernels ----------------------------------------------------------------------

def test_kernels_experiment_small(tmp_path):
    cfg = dict(cli.KERNELS_DEFAULTS)
    cfg.update(trials=5, N_max=30, quad_samples=200, quad_N_max=20,
               seed=123, out=str(tmp_path / "k"))
    worst, failures = cli.kernels_experiment(cfg, log=lambda *_: None)
    assert failures == 0
    assert worst["orth"] < 1e-11
    assert worst["quad_min_slack"] >= -1e-12
    report = open(os.path.join(cfg["out"], "kernels_report.csv")).read()
    assert report.startswith("property,value")


def test_kernels_cli_exit_code():
    assert run_main(["kernels", "--trials", "3", "--N-max", "20", "--seed", "2"]) == 0


def test_cli_requires_mode():
    with pytest.raises(SystemExit):
        run_main([])
