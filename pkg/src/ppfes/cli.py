"""Command-line entry point: ``python -m ppfes <command> ...``.

Commands
--------
run
    Execute an experiment config (INI file and/or flags) and write one
    JSON-lines file per (algorithm, distribution, function, n).
figure
    Emit plot-ready CSV for one figure: ``norms``, ``angles``,
    ``sigma_trace``, ``hitting_times``, ``ecdf`` or ``auc_groups``.
bench-samplers
    Time the inverse-transform samplers.
probe-norms, probe-angles
    Step-length statistics and angle histograms in long CSV format.

On success a JSON summary line goes to stdout and the exit code is 0. On
failure a single JSON line ``{"status": "error", ...}`` goes to stderr and
the exit code is 1 (2 for usage and config errors).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import distributions as dists
from . import experiment as ex
from . import perf
from .sampling import Mode

FIGURES = ("norms", "angles", "sigma_trace", "hitting_times", "ecdf", "auc_groups")
LOG_FIGURES = {"hitting_times", "ecdf", "auc_groups"}

EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class MissingInputs(Exception):
    def __init__(self, missing):
        super().__init__("missing inputs: " + ", ".join(map(str, missing)))
        self.missing = [str(m) for m in missing]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _csv_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _int_list(text):
    return [int(t) for t in _csv_list(text)]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ppfes", description="Distribution-agnostic evolution strategies: experiments and probes.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("--config", help="INI file with an [experiment] section")
    r.add_argument("--algorithms", help=f"comma list of {', '.join(ex.ALGORITHMS)}")
    r.add_argument("--distributions", help=f"comma list of {', '.join(k.value for k in dists.Kind)}")
    r.add_argument("--modes", help=f"comma list of {', '.join(m.value for m in Mode)}")
    r.add_argument("--functions", help="comma list of function ids")
    r.add_argument("--dims", help="comma list of dimensions")
    r.add_argument("--instances", type=int)
    r.add_argument("--runs-per-instance", type=int, dest="runs_per_instance")
    r.add_argument("--budget", help="evaluations per run, an integer or '<k>n' (default 10000n)")
    r.add_argument("--sigma0", help="one value, or 'algorithm: value' pairs")
    r.add_argument("--seed", type=int)
    r.add_argument("--output-dir", dest="output_dir")
    r.add_argument("--workers", type=int, help="worker processes (default 1)")

    f = sub.add_parser("figure", help="emit plot-ready CSV for one figure")
    f.add_argument("name", choices=FIGURES)
    f.add_argument("--input", nargs="+", default=[], help="run-log files/directories, or a probe CSV for norms/angles")
    f.add_argument("--output-dir", default=".", dest="output_dir")
    f.add_argument("--distributions", type=_csv_list, default=[k.value for k in dists.Kind])
    f.add_argument("--dims", type=_int_list, default=None, help="norms: 2,10,50,100; sigma_trace: 2,10,50")
    f.add_argument("--samples", type=int, default=None, help="norms: 10^6; angles: 10^5")
    f.add_argument("--bins", type=int, default=64)
    f.add_argument("--modes", type=_csv_list, default=[m.value for m in Mode], help="angles only")
    f.add_argument("--runs", type=int, default=100, help="sigma_trace runs per cell")
    f.add_argument("--evals-per-dim", type=int, default=150, dest="evals_per_dim", help="sigma_trace length / n")
    f.add_argument("--target", type=float, default=perf.LOWER_BOUND, help="hitting_times target precision")
    f.add_argument("--group-by", type=_csv_list, default=None, dest="group_by")
    f.add_argument("--points", type=int, default=perf.GRID_POINTS, help="budget grid size")
    f.add_argument("--budget", type=float, default=None, help="right end of the budget grid")
    f.add_argument("--ub", type=float, default=perf.UPPER_BOUND)
    f.add_argument("--lb", type=float, default=perf.LOWER_BOUND)
    f.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bench-samplers", help="time the samplers")
    b.add_argument("--samples", type=int, default=10**6)
    b.add_argument("--repeats", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--output-dir", default=".", dest="output_dir")

    pn = sub.add_parser("probe-norms", help="step-length statistics")
    pn.add_argument("--distributions", type=_csv_list, default=[k.value for k in dists.Kind])
    pn.add_argument("--dims", type=_int_list, default=[2, 10, 50, 100])
    pn.add_argument("--samples", type=int, default=10**6)
    pn.add_argument("--seed", type=int, default=0)
    pn.add_argument("--output-dir", default=".", dest="output_dir")

    pa = sub.add_parser("probe-angles", help="angle-to-ones histograms")
    pa.add_argument("--distributions", type=_csv_list, default=[k.value for k in dists.Kind])
    pa.add_argument("--modes", type=_csv_list, default=["plain"])
    pa.add_argument("--n", type=int, default=2)
    pa.add_argument("--samples", type=int, default=10**5)
    pa.add_argument("--bins", type=int, default=64)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--output-dir", default=".", dest="output_dir")
    return p


def _out(args, name) -> Path:
    d = Path(args.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _check_names(distributions=(), modes=()):
    for d in distributions:
        dists.get(d)
    for m in modes:
        try:
            Mode(m)
        except ValueError:
            raise ValueError(f"unknown mode {m!r}") from None


def _logs(inputs):
    if not inputs:
        raise MissingInputs(["--input (run-log files or directories)"])
    missing = [p for p in inputs if not Path(p).exists()]
    if missing:
        raise MissingInputs(missing)
    logs = perf.read_logs(inputs)
    if not logs:
        raise MissingInputs([f"{p} (no run logs found)" for p in inputs])
    return logs


def _probe_input(inputs):
    if not inputs:
        return None
    missing = [p for p in inputs if not Path(p).is_file()]
    if missing:
        raise MissingInputs(missing)
    import csv

    rows = []
    for p in inputs:
        with open(p, encoding="utf-8", newline="") as fh:
            rows += list(csv.DictReader(fh))
    return rows


def cmd_run(args) -> dict:
    keys = ("algorithms", "distributions", "modes", "functions", "dims", "instances", "runs_per_instance", "budget", "sigma0", "seed", "output_dir", "workers")
    cfg = ex.load_config(args.config, {k: getattr(args, k) for k in keys})
    files = ex.cmd_run(cfg)
    return {"files": [str(f) for f in files], "runs": cfg.total_runs}


def cmd_figure(args) -> dict:
    name = args.name
    files = []
    if name == "norms":
        rows = _probe_input(args.input)
        if rows is None:
            _check_names(args.distributions)
            rows = ex.norm_rows(args.distributions, args.dims or [2, 10, 50, 100], args.samples or 10**6, args.seed)
        wide = {}
        for r in rows:
            key = (r["kind"], int(r["n"]))
            wide.setdefault(key, {"distribution": key[0], "n": key[1]})[r["statistic"]] = float(r["value"])
        table = []
        for (kind, n), row in sorted(wide.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            row["mean_over_sqrt_n"] = row["mean"] / n**0.5
            row["median_over_n"] = row["median"] / n
            table.append(row)
        path = _out(args, "norms.csv")
        perf.write_csv(table, path, ["distribution", "n", "mean", "std", "median", "iqr", "mean_over_sqrt_n", "median_over_n"])
        files.append(path)
    elif name == "angles":
        rows = _probe_input(args.input)
        if rows is None:
            _check_names(args.distributions, args.modes)
            rows = ex.angle_rows(args.distributions, args.modes, 2, args.samples or 10**5, args.bins, args.seed)
        table = [{"distribution": r["kind"], "mode": r["mode"], "angle": float(r["bin_center"]), "frequency": float(r["frequency"])} for r in rows]
        path = _out(args, "angles.csv")
        perf.write_csv(table, path)
        files.append(path)
    elif name == "sigma_trace":
        _check_names(args.distributions)
        table = []
        for n in args.dims or [2, 10, 50]:
            for d in args.distributions:
                evals, sigma = ex.sigma_trace(d, n, args.runs, args.evals_per_dim * n, args.seed)
                table += [{"distribution": dists.get(d).name, "n": n, "evals": int(e), "mean_sigma": float(s)} for e, s in zip(evals, sigma)]
        path = _out(args, "sigma_trace.csv")
        perf.write_csv(table, path)
        files.append(path)
    elif name == "hitting_times":
        table = ex.hitting_time_rows(_logs(args.input), args.target)
        path = _out(args, "hitting_times.csv")
        perf.write_csv(table, path)
        files.append(path)
    elif name == "ecdf":
        logs = _logs(args.input)
        group_by = args.group_by or ["algorithm", "distribution"]
        curve_map = perf.curves(logs, group_by, args.budget, args.points, args.ub, args.lb)
        path = _out(args, "ecdf.csv")
        perf.write_csv(perf.curve_rows(curve_map, group_by), path, [*group_by, "budget", "value"])
        side = _out(args, "ecdf_auc.csv")
        auc_rows = [{**dict(zip(group_by, key)), "auc": perf.auc(c)} for key, c in curve_map.items()]
        perf.write_csv(auc_rows, side, [*group_by, "auc"])
        files += [path, side]
    else:
        logs = _logs(args.input)
        group_by = args.group_by or ["algorithm", "distribution", "function_group", "n"]
        rows = perf.aggregate(logs, group_by, args.budget, args.points, args.ub, args.lb)
        path = _out(args, "auc_groups.csv")
        perf.write_csv(rows, path, [*group_by, "runs", "auc"])
        files.append(path)
    return {"figure": name, "files": [str(f) for f in files]}


def cmd_bench_samplers(args) -> dict:
    rows = ex.bench_samplers(args.samples, args.repeats, args.seed)
    path = _out(args, "bench_samplers.csv")
    perf.write_csv(rows, path)
    return {"files": [str(path)], "table": rows}


def cmd_probe_norms(args) -> dict:
    _check_names(args.distributions)
    rows = ex.norm_rows(args.distributions, args.dims, args.samples, args.seed)
    path = _out(args, "probe_norms.csv")
    perf.write_csv(rows, path, ["kind", "n", "statistic", "value"])
    return {"files": [str(path)]}


def cmd_probe_angles(args) -> dict:
    _check_names(args.distributions, args.modes)
    rows = ex.angle_rows(args.distributions, args.modes, args.n, args.samples, args.bins, args.seed)
    path = _out(args, "probe_angles.csv")
    perf.write_csv(rows, path, ["kind", "mode", "bin_center", "frequency"])
    return {"files": [str(path)]}


COMMANDS = {
    "run": cmd_run,
    "figure": cmd_figure,
    "bench-samplers": cmd_bench_samplers,
    "probe-norms": cmd_probe_norms,
    "probe-angles": cmd_probe_angles,
}


def _fail(kind: str, message: str, code: int, **extra) -> int:
    print(json.dumps({"status": "error", "error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        result = COMMANDS[args.command](args)
    except ex.ConfigError as exc:
        return _fail("config", str(exc), EXIT_USAGE)
    except MissingInputs as exc:
        return _fail("missing_inputs", str(exc), EXIT_FAILURE, missing=exc.missing)
    except KeyboardInterrupt:
        return _fail("interrupted", "interrupted; files truncated at the last complete run", 130)
    except (ValueError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_FAILURE)
    print(json.dumps({"status": "ok", "command": args.command, **result}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
