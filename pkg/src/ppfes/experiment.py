"""Declarative experiments: config parsing, the cross-product runner and studies.

A config is an INI file with a single ``[experiment]`` section. List-valued
keys take comma-separated names::

    [experiment]
    algorithms = one-plus-one, cma
    distributions = gaussian, cauchy
    modes = plain
    functions = sphere
    dims = 2, 10
    instances = 10
    runs_per_instance = 1
    budget = 10000n
    sigma0 = cma: 2, one-plus-one: 2
    seed = 0
    output_dir = runs

Every run gets its own random stream keyed by the positions of its
algorithm, distribution, mode and function in the global registries plus
its dimension, instance and repetition index, so adding a cell to a config
never changes the runs of the other cells.
"""
from __future__ import annotations

import configparser
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import distributions as dists
from . import perf
from .problems import FunctionId, make_instance
from .sampling import MutationPipeline, Mode, norm_statistics, angle_to_ones_histogram, open_uniform, substream
from .strategies import ALGORITHMS, DEFAULT_SIGMA0, EvalBudgetedObjective, run

SECTION = "experiment"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    algorithms: list = field(default_factory=lambda: ["one-plus-one"])
    distributions: list = field(default_factory=lambda: ["gaussian"])
    modes: list = field(default_factory=lambda: ["plain"])
    functions: list = field(default_factory=lambda: ["sphere"])
    dims: list = field(default_factory=lambda: [2, 10, 20])
    instances: int = 25
    runs_per_instance: int = 1
    budget: int | str = "10000n"
    sigma0: float | dict | None = None
    seed: int = 0
    output_dir: str = "runs"
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        """Check every field; raises :class:`ConfigError` listing all problems."""
        problems = []
        for name in ("algorithms", "distributions", "modes", "functions", "dims"):
            if not getattr(self, name):
                problems.append(f"{name} must not be empty")
        problems += [f"unknown algorithm {a!r}" for a in self.algorithms if a not in ALGORITHMS]
        problems += [f"unknown distribution {d!r}" for d in self.distributions if d not in {k.value for k in dists.Kind}]
        problems += [f"unknown mode {m!r}" for m in self.modes if m not in {k.value for k in Mode}]
        problems += [f"unknown function {f!r}" for f in self.functions if f not in {k.value for k in FunctionId}]
        problems += [f"dimension {n} must be >= 2" for n in self.dims if int(n) < 2]
        if self.instances < 1:
            problems.append("instances must be >= 1")
        if self.runs_per_instance < 1:
            problems.append("runs_per_instance must be >= 1")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        try:
            self.budget_for(2)
        except ConfigError as exc:
            problems.append(str(exc))
        if isinstance(self.sigma0, dict):
            problems += [f"sigma0 given for unknown algorithm {a!r}" for a in self.sigma0 if a not in ALGORITHMS]
            problems += [f"sigma0 for {a} must be > 0" for a, v in self.sigma0.items() if not v > 0]
        elif self.sigma0 is not None and not self.sigma0 > 0:
            problems.append("sigma0 must be > 0")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def budget_for(self, n: int) -> int:
        """Evaluation budget at dimension ``n``; ``"<k>n"`` means ``k * n``."""
        b = self.budget
        if isinstance(b, str):
            text = b.strip().replace(" ", "")
            try:
                value = int(float(text[:-1])) * n if text.endswith("n") else int(float(text))
            except ValueError:
                raise ConfigError(f"bad budget {b!r}; use an integer or '<k>n'") from None
        else:
            value = int(b)
        if value < 1:
            raise ConfigError("budget must be positive")
        return value

    def sigma0_for(self, algorithm: str) -> float:
        if isinstance(self.sigma0, dict):
            return float(self.sigma0.get(algorithm, DEFAULT_SIGMA0[algorithm]))
        if self.sigma0 is None:
            return DEFAULT_SIGMA0[algorithm]
        return float(self.sigma0)

    @property
    def total_runs(self) -> int:
        return (
            len(self.algorithms)
            * len(self.distributions)
            * len(self.modes)
            * len(self.functions)
            * len(self.dims)
            * self.instances
            * self.runs_per_instance
        )


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


def parse_sigma0(text):
    """``"2"`` gives one value for all algorithms, ``"cma: 2, sigma-sa: 1.5"`` a map."""
    if text is None or isinstance(text, (int, float, dict)):
        return text
    text = text.strip()
    if not text or text.lower() == "default":
        return None
    if ":" not in text:
        return float(text)
    out = {}
    for item in _split(text):
        key, _, value = item.partition(":")
        out[key.strip()] = float(value)
    return out


_LIST_INT = {"dims"}
_LIST_STR = {"algorithms", "distributions", "modes", "functions"}
_INT = {"instances", "runs_per_instance", "seed", "workers"}


def coerce(key: str, value):
    """Convert a raw config string (or CLI value) to the field's type."""
    if value is None:
        return None
    try:
        if key in _LIST_STR:
            return [v.lower() for v in (_split(value) if isinstance(value, str) else value)]
        if key in _LIST_INT:
            return [int(v) for v in (_split(value) if isinstance(value, str) else value)]
        if key in _INT:
            return int(value)
        if key == "sigma0":
            return parse_sigma0(value)
        if key == "budget":
            value = str(value).strip()
            return int(value) if value.isdigit() else value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    return value


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read an INI config (optional) and apply overrides, then validate."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        if not parser.read(path, encoding="utf-8"):
            raise ConfigError(f"config file not found: {path}")
        if not parser.has_section(SECTION):
            raise ConfigError(f"{path}: missing [{SECTION}] section")
        for key, value in parser.items(SECTION):
            if key not in known:
                raise ConfigError(f"{path}: unknown key {key!r}")
            values[key] = coerce(key, value)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown setting {key!r}")
        values[key] = coerce(key, value)
    return ExperimentConfig(**values).validate()


# -- running -----------------------------------------------------------------


@dataclass(frozen=True)
class RunSpec:
    algorithm: str
    distribution: str
    mode: str
    function_id: str
    n: int
    instance_seed: int
    repetition: int
    budget: int
    sigma0: float
    seed: int

    @property
    def stream_key(self) -> tuple[int, ...]:
        return (
            ALGORITHMS.index(self.algorithm),
            list(dists.Kind).index(dists.Kind(self.distribution)),
            list(Mode).index(Mode(self.mode)),
            list(FunctionId).index(FunctionId(self.function_id)),
            self.n,
            self.instance_seed,
            self.repetition,
        )

    @property
    def run_seed(self) -> int:
        """64-bit seed that alone reproduces this run's pipeline."""
        return int(substream(self.seed, *self.stream_key).generate_state(1, np.uint64)[0])


def cells(cfg: ExperimentConfig):
    """``(algorithm, distribution, function, n)`` cells in config order; one output file each."""
    return itertools.product(cfg.algorithms, cfg.distributions, cfg.functions, cfg.dims)


def cell_runs(cfg: ExperimentConfig, algorithm, distribution, function_id, n) -> list[RunSpec]:
    return [
        RunSpec(algorithm, distribution, mode, function_id, int(n), inst, rep, cfg.budget_for(n), cfg.sigma0_for(algorithm), cfg.seed)
        for mode in cfg.modes
        for inst in range(1, cfg.instances + 1)
        for rep in range(cfg.runs_per_instance)
    ]


def cell_filename(algorithm, distribution, function_id, n) -> str:
    return f"{algorithm}_{distribution}_{function_id}_{n}.jsonl"


def execute(spec: RunSpec) -> perf.RunLog:
    """Perform one run and return its log."""
    inst = make_instance(spec.function_id, spec.n, spec.instance_seed)
    pipe = MutationPipeline(spec.distribution, spec.mode, seed=spec.run_seed)
    obj = EvalBudgetedObjective(inst, budget=spec.budget)
    header = {"run_seed": spec.run_seed, "experiment_seed": spec.seed, "repetition": spec.repetition}
    return run(spec.algorithm, pipe, obj, sigma0=spec.sigma0, header=header)


def _execute_text(spec: RunSpec) -> str:
    return perf.dumps_log(execute(spec))


def cmd_run(cfg: ExperimentConfig, progress=None) -> list[Path]:
    """Run the full cross product and write one JSON-lines file per cell.

    Each file is written by this process only, one complete run at a time.
    If the run is interrupted the file being written is truncated back to
    the last complete run.
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for algorithm, distribution, function_id, n in cells(cfg):
            specs = cell_runs(cfg, algorithm, distribution, function_id, n)
            path = out / cell_filename(algorithm, distribution, function_id, n)
            texts = pool.map(_execute_text, specs) if pool else map(_execute_text, specs)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                done = 0
                try:
                    for text in texts:
                        fh.write(text)
                        fh.flush()
                        done = fh.tell()
                        if progress is not None:
                            progress(path)
                except BaseException:
                    fh.truncate(done)
                    raise
            written.append(path)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return written


# -- studies -------------------------------------------------------------------


def sigma_trace(distribution, n: int, runs: int = 100, evals: int | None = None, seed: int = 0, mode=Mode.PLAIN, sigma0: float = 2.0):
    """Mean step size of the (1+1)-ES on sphere instances, per evaluation.

    Runs ignore the target precision and use their full ``evals`` budget
    (``150 n`` by default) so that every run contributes to every point.

    Returns
    -------
    evals : ndarray
        ``1 .. evals``.
    mean_sigma : ndarray
        Arithmetic mean of ``sigma`` over the runs after each evaluation.
    """
    evals = int(evals if evals is not None else 150 * n)
    spec = dists.get(distribution)
    total = np.zeros(evals)
    for r in range(runs):
        inst = make_instance(FunctionId.SPHERE, n, r + 1)
        pipe = MutationPipeline(spec, mode, seed=substream(seed, list(dists.Kind).index(spec.kind), n, r))
        obj = EvalBudgetedObjective(inst, budget=evals, target=0.0)
        trace = np.empty(evals)

        def record(state, obj, trace=trace):
            trace[obj.evals_used - 1] = state.sigma

        run("one-plus-one", pipe, obj, sigma0=sigma0, callback=record)
        if obj.evals_used < evals:
            trace[obj.evals_used :] = trace[obj.evals_used - 1]
        total += trace
    return np.arange(1, evals + 1), total / runs


def log_decay_slope(evals, mean_sigma, start: float = 0.5) -> tuple[float, float]:
    """Least-squares slope of ``log10(mean_sigma)`` per evaluation and its R^2.

    Only the tail from ``start * len(evals)`` on is fitted, which skips the
    adaptation transient.
    """
    evals = np.asarray(evals, dtype=float)
    y = np.log10(np.asarray(mean_sigma, dtype=float))
    k = int(start * len(evals))
    x, y = evals[k:], y[k:]
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def hitting_time_rows(logs, target: float = perf.LOWER_BOUND) -> list[dict]:
    rows = []
    for log in logs:
        h = log.header
        rows.append(
            {
                "algorithm": h.get("algorithm"),
                "distribution": h.get("distribution"),
                "mode": h.get("mode"),
                "function_id": h.get("function_id"),
                "n": h.get("n"),
                "instance_seed": h.get("instance_seed"),
                "run_seed": h.get("run_seed"),
                "hitting_time": perf.hitting_time(log, target),
            }
        )
    return rows


def norm_rows(distributions, dims, samples: int = 10**6, seed: int = 0) -> list[dict]:
    """Long-format step-length statistics, one row per (kind, n, statistic)."""
    rows = []
    for d in distributions:
        spec = dists.get(d)
        for n in dims:
            st = norm_statistics(spec, int(n), samples, seed=substream(seed, list(dists.Kind).index(spec.kind), n))
            for stat in ("mean", "std", "median", "iqr"):
                rows.append({"kind": spec.name, "n": int(n), "statistic": stat, "value": getattr(st, stat)})
    return rows


def angle_rows(distributions, modes=(Mode.PLAIN,), n: int = 2, samples: int = 10**5, bins: int = 64, seed: int = 0) -> list[dict]:
    rows = []
    for d in distributions:
        spec = dists.get(d)
        for mode in modes:
            mode = Mode(mode)
            centers, freq, _ = angle_to_ones_histogram(
                spec, n, samples, bins, mode, seed=substream(seed, list(dists.Kind).index(spec.kind), list(Mode).index(mode))
            )
            rows += [{"kind": spec.name, "mode": mode.value, "bin_center": float(c), "frequency": float(f)} for c, f in zip(centers, freq)]
    return rows


def bench_samplers(samples: int = 10**6, repeats: int = 10, seed: int = 0) -> list[dict]:
    """Wall-clock time to draw ``samples`` deviates per distribution.

    Every kind goes through the same inverse-transform path: uniform
    deviates on (0, 1) followed by the PPF.
    """
    if samples < 10**4:
        raise ValueError("bench-samplers needs at least 10^4 samples")
    rng = np.random.default_rng(seed)
    timings = {}
    for spec in dists.ALL:
        dists.ppf(spec, open_uniform(rng, 1000))  # warm-up
        t = []
        for _ in range(repeats):
            start = time.perf_counter()
            dists.ppf(spec, open_uniform(rng, samples))
            t.append(time.perf_counter() - start)
        timings[spec.name] = np.asarray(t)
    ref = timings["gaussian"].mean()
    return [
        {
            "distribution": name,
            "samples": samples,
            "repeats": repeats,
            "mean_s": float(t.mean()),
            "std_s": float(t.std(ddof=1)) if t.size > 1 else 0.0,
            "ratio_vs_gaussian": float(t.mean() / ref),
        }
        for name, t in timings.items()
    ]
