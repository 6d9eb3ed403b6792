import csv
import json
import math

import numpy as np
import pytest

from ppfes import cli
from ppfes import experiment as ex
from ppfes import perf


def run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


# -- config ------------------------------------------------------------------------


def test_load_config_file_and_overrides(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text(
        "[experiment]\nalgorithms = cma, sigma-sa\ndistributions = Laplace\ndims = 2, 5\n"
        "instances = 3\nbudget = 50n\nsigma0 = cma: 1.5\nseed = 4\n"
    )
    cfg = ex.load_config(ini, {"instances": 2, "output_dir": str(tmp_path / "o")})
    assert cfg.algorithms == ["cma", "sigma-sa"] and cfg.distributions == ["laplace"]
    assert cfg.dims == [2, 5] and cfg.instances == 2 and cfg.seed == 4
    assert cfg.budget_for(5) == 250
    assert cfg.sigma0_for("cma") == 1.5
    assert cfg.sigma0_for("sigma-sa") == pytest.approx(10**0.25)
    assert cfg.total_runs == 2 * 1 * 1 * 1 * 2 * 2


def test_config_defaults():
    cfg = ex.ExperimentConfig()
    assert cfg.budget_for(10) == 100_000
    assert cfg.sigma0_for("one-plus-one") == 2.0 and cfg.sigma0_for("cma-plus") == 2.0
    assert ex.ExperimentConfig(sigma0=3.0).sigma0_for("sigma-sa") == 3.0
    assert ex.ExperimentConfig(budget=123).budget_for(10) == 123


@pytest.mark.parametrize(
    "overrides, message",
    [
        ({"algorithms": "cma, de"}, "unknown algorithm 'de'"),
        ({"distributions": "student"}, "unknown distribution"),
        ({"modes": "mirrored"}, "unknown mode"),
        ({"functions": "katsuura"}, "unknown function"),
        ({"dims": "1"}, "must be >= 2"),
        ({"instances": 0}, "instances must be >= 1"),
        ({"budget": "lots"}, "bad budget"),
        ({"sigma0": "-1"}, "sigma0 must be > 0"),
        ({"sigma0": "es: 2"}, "unknown algorithm"),
        ({"colour": "red"}, "unknown setting"),
    ],
)
def test_config_errors(overrides, message):
    with pytest.raises(ex.ConfigError, match=message):
        ex.load_config(None, overrides)


def test_config_file_errors(tmp_path):
    with pytest.raises(ex.ConfigError, match="not found"):
        ex.load_config(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[other]\nseed = 1\n")
    with pytest.raises(ex.ConfigError, match="missing"):
        ex.load_config(bad)
    bad.write_text("[experiment]\nspeed = 1\n")
    with pytest.raises(ex.ConfigError, match="unknown key"):
        ex.load_config(bad)


# -- runner ------------------------------------------------------------------------


def small_config(tmp_path, **kw):
    values = dict(
        algorithms=["one-plus-one"],
        distributions=["gaussian"],
        modes=["plain"],
        functions=["sphere"],
        dims=[2],
        instances=10,
        output_dir=str(tmp_path / "runs"),
    )
    values.update(kw)
    return ex.ExperimentConfig(**values).validate()


def test_cmd_run_counts_and_files(tmp_path):
    cfg = small_config(tmp_path)
    files = ex.cmd_run(cfg)
    assert [f.name for f in files] == ["one-plus-one_gaussian_sphere_2.jsonl"]
    logs = perf.read_jsonl(files[0])
    assert len(logs) == 10
    assert [l.header["instance_seed"] for l in logs] == list(range(1, 11))
    assert all(l.header["sigma0"] == 2.0 and l.header["budget"] == 20_000 for l in logs)


def test_cmd_run_cross_product_count(tmp_path):
    cfg = small_config(
        tmp_path,
        algorithms=["one-plus-one", "cma"],
        distributions=["uniform", "cauchy"],
        modes=["plain", "swapped"],
        functions=["sphere", "rastrigin"],
        dims=[2, 3],
        instances=2,
        runs_per_instance=2,
        budget=200,
    )
    files = ex.cmd_run(cfg)
    assert len(files) == 2 * 2 * 2 * 2
    assert sum(len(perf.read_jsonl(f)) for f in files) == cfg.total_runs == 128


def test_cmd_run_deterministic_bytes(tmp_path):
    a = ex.cmd_run(small_config(tmp_path, output_dir=str(tmp_path / "a"), algorithms=["cma", "sigma-sa"], budget=500))
    b = ex.cmd_run(small_config(tmp_path, output_dir=str(tmp_path / "b"), algorithms=["cma", "sigma-sa"], budget=500))
    for fa, fb in zip(a, b):
        assert fa.read_bytes() == fb.read_bytes()


def test_run_streams_do_not_depend_on_other_cells(tmp_path):
    alone = ex.cmd_run(small_config(tmp_path, output_dir=str(tmp_path / "a"), distributions=["laplace"]))
    mixed = ex.cmd_run(small_config(tmp_path, output_dir=str(tmp_path / "b"), distributions=["gaussian", "laplace"]))
    assert alone[0].read_bytes() == mixed[1].read_bytes()


def test_run_seed_reproduces_a_single_run(tmp_path):
    cfg = small_config(tmp_path, instances=2, distributions=["cauchy"], budget=300)
    spec = ex.cell_runs(cfg, "one-plus-one", "cauchy", "sphere", 2)[1]
    log = perf.read_jsonl(ex.cmd_run(cfg)[0])[1]
    assert log.header["run_seed"] == spec.run_seed
    again = ex.execute(spec)
    assert again.evals == log.evals and again.best == log.best


def test_interrupt_truncates_at_run_boundary(tmp_path, monkeypatch):
    cfg = small_config(tmp_path, instances=5)
    calls = {"n": 0}
    real = ex._execute_text

    def flaky(spec):
        calls["n"] += 1
        if calls["n"] == 4:
            raise KeyboardInterrupt
        return real(spec)

    monkeypatch.setattr(ex, "_execute_text", flaky)
    with pytest.raises(KeyboardInterrupt):
        ex.cmd_run(cfg)
    path = tmp_path / "runs" / "one-plus-one_gaussian_sphere_2.jsonl"
    logs = perf.read_jsonl(path)
    assert len(logs) == 3
    assert path.read_text().endswith("\n")


def test_worker_pool_matches_serial(tmp_path):
    serial = ex.cmd_run(small_config(tmp_path, output_dir=str(tmp_path / "s"), instances=4, budget=300))
    pooled = ex.cmd_run(small_config(tmp_path, output_dir=str(tmp_path / "p"), instances=4, budget=300, workers=2))
    assert serial[0].read_bytes() == pooled[0].read_bytes()


# -- studies -----------------------------------------------------------------------


def test_sigma_trace_shape_and_decay():
    evals, sigma = ex.sigma_trace("gaussian", 2, runs=5, evals=300, seed=1)
    assert evals.shape == sigma.shape == (300,)
    assert sigma[-1] < sigma[0]
    slope, r2 = ex.log_decay_slope(evals, sigma)
    assert slope < 0 and 0 <= r2 <= 1


def test_log_decay_slope_exact_line():
    e = np.arange(1, 101)
    slope, r2 = ex.log_decay_slope(e, 10.0 ** (-0.01 * e))
    assert slope == pytest.approx(-0.01) and r2 == pytest.approx(1.0)


def test_bench_samplers_table():
    rows = ex.bench_samplers(10**4, repeats=3)
    assert len(rows) == 6
    g = next(r for r in rows if r["distribution"] == "gaussian")
    assert g["ratio_vs_gaussian"] == 1.0
    with pytest.raises(ValueError):
        ex.bench_samplers(10)


# -- command line ------------------------------------------------------------------


def test_cli_run_and_figures(tmp_path, capsys):
    runs = tmp_path / "runs"
    code, out, _ = run_cli(capsys, "run", "--algorithms", "one-plus-one,cma", "--distributions", "gaussian,cauchy", "--dims", "2", "--instances", "3", "--output-dir", runs)
    assert code == 0
    summary = json.loads(out)
    assert summary["status"] == "ok" and summary["runs"] == 12 and len(summary["files"]) == 4

    figs = tmp_path / "figs"
    code, out, _ = run_cli(capsys, "figure", "hitting_times", "--input", runs, "--output-dir", figs)
    assert code == 0
    rows = read_csv(figs / "hitting_times.csv")
    assert len(rows) == 12 and all(r["hitting_time"] for r in rows)

    code, out, _ = run_cli(capsys, "figure", "ecdf", "--input", runs, "--output-dir", figs)
    assert code == 0
    curve = read_csv(figs / "ecdf.csv")
    assert list(curve[0]) == ["algorithm", "distribution", "budget", "value"]
    assert len(curve) == 4 * perf.GRID_POINTS
    side = read_csv(figs / "ecdf_auc.csv")
    assert len(side) == 4 and all(0 <= float(r["auc"]) <= 1 for r in side)

    code, out, _ = run_cli(capsys, "figure", "auc_groups", "--input", runs, "--output-dir", figs)
    assert code == 0
    table = read_csv(figs / "auc_groups.csv")
    assert list(table[0]) == ["algorithm", "distribution", "function_group", "n", "runs", "auc"]


def test_cli_run_from_config(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text(f"[experiment]\nalgorithms = sigma-sa\ndims = 3\ninstances = 2\noutput_dir = {tmp_path / 'o'}\n")
    code, out, _ = run_cli(capsys, "run", "--config", ini, "--instances", "4")
    assert code == 0 and json.loads(out)["runs"] == 4


def test_cli_probes_and_norms_figure(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "probe-norms", "--distributions", "gaussian,cauchy", "--dims", "2,10", "--samples", 2000, "--output-dir", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "probe_norms.csv")
    assert len(rows) == 2 * 2 * 4 and list(rows[0]) == ["kind", "n", "statistic", "value"]
    code, _, _ = run_cli(capsys, "figure", "norms", "--input", tmp_path / "probe_norms.csv", "--output-dir", tmp_path)
    assert code == 0
    wide = read_csv(tmp_path / "norms.csv")
    assert len(wide) == 4
    g2 = next(r for r in wide if r["distribution"] == "gaussian" and r["n"] == "2")
    assert float(g2["mean_over_sqrt_n"]) == pytest.approx(float(g2["mean"]) / math.sqrt(2))

    code, _, _ = run_cli(capsys, "probe-angles", "--distributions", "uniform", "--modes", "plain,swapped", "--samples", 6400, "--output-dir", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "probe_angles.csv")
    assert len(rows) == 2 * 64
    code, _, _ = run_cli(capsys, "figure", "angles", "--input", tmp_path / "probe_angles.csv", "--output-dir", tmp_path)
    assert code == 0
    assert len(read_csv(tmp_path / "angles.csv")) == 128


def test_cli_sigma_trace_figure(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "figure", "sigma_trace", "--distributions", "gaussian", "--dims", "2", "--runs", 3, "--evals-per-dim", 20, "--output-dir", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "sigma_trace.csv")
    assert len(rows) == 40 and list(rows[0]) == ["distribution", "n", "evals", "mean_sigma"]


def test_cli_bench(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "bench-samplers", "--samples", 10**4, "--repeats", 2, "--output-dir", tmp_path)
    assert code == 0 and len(json.loads(out)["table"]) == 6
    assert len(read_csv(tmp_path / "bench_samplers.csv")) == 6


def test_cli_errors_are_machine_readable(tmp_path, capsys):
    code, out, err = run_cli(capsys, "run", "--distributions", "student", "--output-dir", tmp_path)
    assert code == 2 and out == ""
    msg = json.loads(err)
    assert msg["status"] == "error" and msg["error"] == "config"
    assert not any(tmp_path.iterdir())

    code, _, err = run_cli(capsys, "figure", "ecdf", "--input", tmp_path / "nope", tmp_path / "nada")
    assert code == 1
    msg = json.loads(err)
    assert msg["error"] == "missing_inputs" and len(msg["missing"]) == 2

    code, _, err = run_cli(capsys, "figure", "hitting_times")
    assert code == 1 and json.loads(err)["error"] == "missing_inputs"

    code, _, err = run_cli(capsys, "figure", "volcano")
    assert code == 2 and json.loads(err)["error"] == "usage"

    code, _, err = run_cli(capsys, "bench-samplers", "--samples", 10)
    assert code == 1 and json.loads(err)["status"] == "error"


def test_cli_help(capsys):
    assert cli.main(["--help"]) == 0
    assert "bench-samplers" in capsys.readouterr().out
