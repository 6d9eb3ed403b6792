"""Anytime performance: run logs, hitting times, EAF-based ECDFs and AUC.

The EAF-based ECDF of a run at budget ``b`` is the fraction of the
log-precision range ``[lb, ub]`` that the run has covered by evaluation
``b``. It is the limit of the classic target-based ECDF as the number of
log-uniform targets between the bounds goes to infinity.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .problems import function_group

UPPER_BOUND = 1e8
LOWER_BOUND = 1e-8
GRID_POINTS = 64

HEADER_KEYS = (
    "algorithm",
    "distribution",
    "mode",
    "function_id",
    "n",
    "instance_seed",
    "run_seed",
    "sigma0",
    "budget",
)


@dataclass
class RunLog:
    """Best-so-far precision trace of a single run.

    ``evals`` and ``best`` hold one entry per improvement event: the
    evaluation count at which the run first reached a new best precision.
    """

    header: dict = field(default_factory=dict)
    evals: list = field(default_factory=list)
    best: list = field(default_factory=list)

    def record(self, evals: int, precision: float) -> bool:
        """Append an event if ``precision`` improves on the current best."""
        if self.best and precision >= self.best[-1]:
            return False
        if self.evals and evals <= self.evals[-1]:
            raise ValueError("events must be strictly increasing in evals")
        if evals < 1:
            raise ValueError("events start at evals >= 1")
        self.evals.append(int(evals))
        self.best.append(float(precision))
        return True

    @property
    def final_precision(self) -> float:
        return self.best[-1] if self.best else math.inf

    def best_at(self, budget) -> np.ndarray | float:
        """Best precision reached within ``budget`` evaluations (inf if none)."""
        b = np.asarray(budget, dtype=float)
        idx = np.searchsorted(np.asarray(self.evals, dtype=float), b, side="right") - 1
        values = np.concatenate(([math.inf], np.asarray(self.best, dtype=float)))
        out = values[idx + 1]
        return out if out.ndim else float(out)

    def to_records(self) -> list[dict]:
        head = {k: self.header.get(k) for k in HEADER_KEYS}
        head.update({k: v for k, v in self.header.items() if k not in head})
        return [head] + [{"evals": e, "best_precision": p} for e, p in zip(self.evals, self.best)]


def write_jsonl(logs: Iterable[RunLog], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for log in logs:
            fh.write(dumps_log(log))


def dumps_log(log: RunLog) -> str:
    """One run as JSON lines: a header record followed by its events."""
    return "".join(json.dumps(rec, allow_nan=True) + "\n" for rec in log.to_records())


def read_jsonl(path) -> list[RunLog]:
    logs: list[RunLog] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "evals" in rec:
                if not logs:
                    raise ValueError(f"{path}: event record before any header")
                logs[-1].evals.append(int(rec["evals"]))
                logs[-1].best.append(float(rec["best_precision"]))
            else:
                logs.append(RunLog(header=rec))
    return logs


def read_logs(paths) -> list[RunLog]:
    """Read every ``*.jsonl`` under the given files/directories."""
    logs = []
    for p in map(Path, paths):
        files = sorted(p.glob("*.jsonl")) if p.is_dir() else [p]
        for f in files:
            logs.extend(read_jsonl(f))
    return logs


def hitting_time(log: RunLog, target: float) -> int | None:
    if target <= 0:
        raise ValueError("target must be positive")
    for e, p in zip(log.evals, log.best):
        if p <= target:
            return e
    return None


def eaf_fraction(precision, ub: float = UPPER_BOUND, lb: float = LOWER_BOUND):
    """Fraction of the log-precision range ``[lb, ub]`` covered by ``precision``."""
    if not ub > lb > 0:
        raise ValueError("bounds must satisfy ub > lb > 0")
    p = np.maximum(np.asarray(precision, dtype=float), lb)
    with np.errstate(divide="ignore"):
        frac = (math.log10(ub) - np.log10(p)) / (math.log10(ub) - math.log10(lb))
    out = np.clip(frac, 0.0, 1.0)
    return out if out.ndim else float(out)


def eaf_value(log: RunLog, budget, ub: float = UPPER_BOUND, lb: float = LOWER_BOUND):
    return eaf_fraction(log.best_at(budget), ub, lb)


@dataclass(frozen=True)
class EafCurve:
    budgets: np.ndarray
    values: np.ndarray


def budget_grid(budget: float, points: int = GRID_POINTS) -> np.ndarray:
    """Log-spaced evaluation counts from 1 to ``budget``."""
    return np.geomspace(1.0, float(budget), points)


def eaf_ecdf(logs: Sequence[RunLog], budgets, ub: float = UPPER_BOUND, lb: float = LOWER_BOUND) -> EafCurve:
    """Mean EAF fraction over ``logs`` at every budget of the grid."""
    logs = list(logs)
    if not logs:
        raise ValueError("eaf_ecdf needs at least one run log")
    budgets = np.asarray(budgets, dtype=float)
    values = np.mean([eaf_value(log, budgets, ub, lb) for log in logs], axis=0)
    return EafCurve(budgets, np.atleast_1d(values))


def auc(curve: EafCurve) -> float:
    """Trapezoidal area under the curve over log10(budget), normalized to [0, 1]."""
    x = np.log10(np.asarray(curve.budgets, dtype=float))
    y = np.asarray(curve.values, dtype=float)
    if y.size == 0:
        raise ValueError("empty curve")
    if y.size == 1 or x[-1] == x[0]:
        return float(y[0])
    return float(trapezoid(y, x) / (x[-1] - x[0]))


GROUP_KEYS = ("algorithm", "distribution", "mode", "function_id", "function_group", "n")


def _key_value(log: RunLog, key: str):
    if key == "function_group":
        return function_group(log.header["function_id"])
    return log.header.get(key)


def group_logs(logs: Iterable[RunLog], group_by: Sequence[str]) -> dict[tuple, list[RunLog]]:
    cells: dict[tuple, list[RunLog]] = {}
    for log in logs:
        key = tuple(_key_value(log, k) for k in group_by)
        cells.setdefault(key, []).append(log)
    return dict(sorted(cells.items(), key=lambda kv: _sort_key(kv[0])))


def _sort_key(key: tuple) -> tuple:
    # numbers before strings, numbers numerically
    return tuple((0, v, "") if isinstance(v, (int, float)) else (1, 0, str(v)) for v in key)


def aggregate(
    logs: Sequence[RunLog],
    group_by: Sequence[str] = ("algorithm", "distribution"),
    budget: float | None = None,
    points: int = GRID_POINTS,
    ub: float = UPPER_BOUND,
    lb: float = LOWER_BOUND,
) -> list[dict]:
    """AUC of the EAF-based ECDF per group cell.

    All cells share one budget grid, by default running up to the largest
    budget found in the log headers. Rows come out sorted by group key;
    cells without logs do not appear.
    """
    logs = list(logs)
    if not logs:
        return []
    unknown = set(group_by) - set(GROUP_KEYS)
    if unknown:
        raise ValueError(f"cannot group by {sorted(unknown)}")
    if budget is None:
        budget = max(float(log.header.get("budget") or max(log.evals, default=1)) for log in logs)
    grid = budget_grid(budget, points)
    rows = []
    for key, cell in group_logs(logs, group_by).items():
        row = dict(zip(group_by, key))
        row["runs"] = len(cell)
        row["auc"] = auc(eaf_ecdf(cell, grid, ub, lb))
        rows.append(row)
    return rows


def curves(logs, group_by=("algorithm", "distribution"), budget=None, points=GRID_POINTS, ub=UPPER_BOUND, lb=LOWER_BOUND):
    """EAF curves per group cell as ``{key: EafCurve}``."""
    logs = list(logs)
    if budget is None:
        budget = max(float(log.header.get("budget") or max(log.evals, default=1)) for log in logs)
    grid = budget_grid(budget, points)
    return {key: eaf_ecdf(cell, grid, ub, lb) for key, cell in group_logs(logs, group_by).items()}


def write_csv(rows: Sequence[dict], path_or_buffer, columns: Sequence[str] | None = None) -> None:
    rows = list(rows)
    if columns is None:
        columns = list(dict.fromkeys(itertools.chain.from_iterable(r.keys() for r in rows)))
    own = not isinstance(path_or_buffer, io.TextIOBase)
    fh = open(path_or_buffer, "w", newline="", encoding="utf-8") if own else path_or_buffer
    try:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if own:
            fh.close()


def curve_rows(curve_map: dict, group_by: Sequence[str]) -> list[dict]:
    rows = []
    for key, curve in curve_map.items():
        for b, v in zip(curve.budgets, curve.values):
            rows.append({**dict(zip(group_by, key)), "budget": float(b), "value": float(v)})
    return rows
