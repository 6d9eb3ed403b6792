"""Evolution strategies that take their mutations from a :class:`MutationPipeline`.

Four optimizers share the same plumbing:

* ``one-plus-one``: (1+1)-ES with the 1/5th success rule.
* ``sigma-sa``: (mu/mu, lambda)-ES with self-adapted per-coordinate step sizes.
* ``cma``: (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation.
* ``cma-plus``: the elitist (mu/mu_w + lambda) variant.

Only the raw mutation ``z`` comes from the pipeline. The strategy-parameter
updates are the textbook Gaussian ones, with one exception: the CMA path
length is compared against a distribution-specific reference length
``rho`` (see :func:`ppfes.distributions.norm_normalizer`).

Each ``*_step`` function advances its state in place by one iteration and
returns it. Steps raise a :class:`Terminated` subclass when the run cannot
continue; :func:`run` turns that into the end of the run.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dists
from .perf import RunLog
from .problems import ProblemInstance, center_start
from .sampling import Mode, MutationPipeline

log = logging.getLogger(__name__)

TARGET_PRECISION = 1e-8
BUDGET_PER_DIM = 10_000
EIGEN_FLOOR = 1e-20

ALGORITHMS = ("one-plus-one", "sigma-sa", "cma", "cma-plus")
DEFAULT_SIGMA0 = {
    "one-plus-one": 2.0,
    "sigma-sa": 10.0**0.25,
    "cma": 2.0,
    "cma-plus": 2.0,
}


class Terminated(Exception):
    reason = "terminated"


class BudgetExhausted(Terminated):
    reason = "budget"


class Diverged(Terminated):
    """Step size or search point left the range of finite floats."""

    reason = "diverged"


class EvalBudgetedObjective:
    """Counts evaluations, enforces the budget and keeps the run log.

    Parameters
    ----------
    problem : callable
        Maps one point or a ``(k, n)`` array of points to precision values.
        A :class:`ProblemInstance` works directly.
    budget : int, optional
        Maximum number of evaluations, ``10_000 * n`` by default.
    target : float
        Precision at which the run counts as solved.
    n : int, optional
        Search space dimension, read from ``problem.n`` if omitted.
    """

    def __init__(self, problem, budget: int | None = None, target: float = TARGET_PRECISION, n: int | None = None):
        self.problem = problem
        self.n = int(n if n is not None else problem.n)
        self.budget = int(budget if budget is not None else BUDGET_PER_DIM * self.n)
        self.target = target
        self.evals_used = 0
        self.best_precision = math.inf
        self.log = RunLog()

    @property
    def remaining(self) -> int:
        return self.budget - self.evals_used

    @property
    def target_hit(self) -> bool:
        return self.best_precision <= self.target

    @property
    def done(self) -> bool:
        return self.evals_used >= self.budget or self.target_hit

    def __call__(self, x) -> float:
        if self.evals_used >= self.budget:
            raise BudgetExhausted()
        if not np.all(np.isfinite(x)):
            raise Diverged()
        f = float(self.problem(x))
        if math.isnan(f):
            f = math.inf
        self.evals_used += 1
        if f < self.best_precision:
            self.best_precision = f
            self.log.record(self.evals_used, f)
        return f

    def evaluate_batch(self, X) -> np.ndarray:
        """Evaluate as many rows of ``X`` as the budget allows, in order.

        The returned array is shorter than ``X`` when the budget runs out
        mid-batch.
        """
        k = min(len(X), self.remaining)
        if k <= 0:
            raise BudgetExhausted()
        X = X[:k]
        if not np.all(np.isfinite(X)):
            raise Diverged()
        f = np.asarray(self.problem(X), dtype=float).reshape(k)
        # nan would poison the running minimum; it ranks as worst instead
        f[np.isnan(f)] = np.inf
        start = self.evals_used
        self.evals_used += k
        running = np.minimum.accumulate(f)
        improved = np.flatnonzero(running < np.minimum(self.best_precision, np.concatenate(([np.inf], running[:-1]))))
        for i in improved:
            self.log.record(start + i + 1, float(f[i]))
        if improved.size:
            self.best_precision = float(running[-1])
        return f


def _rank(f: np.ndarray) -> np.ndarray:
    # stable: ties keep generation order
    return np.argsort(f, kind="stable")


# -- (1+1)-ES -----------------------------------------------------------------


@dataclass
class OnePlusOneState:
    m: np.ndarray
    sigma: float
    f_m: float
    d: float

    @property
    def n(self) -> int:
        return self.m.size


def init_one_plus_one(x0, sigma0: float, obj: EvalBudgetedObjective) -> OnePlusOneState:
    m = np.array(x0, dtype=float)
    return OnePlusOneState(m=m, sigma=float(sigma0), f_m=obj(m), d=math.sqrt(m.size + 1))


def one_plus_one_step(state: OnePlusOneState, pipe: MutationPipeline, obj: EvalBudgetedObjective) -> OnePlusOneState:
    if obj.evals_used >= obj.budget:
        raise BudgetExhausted()
    with np.errstate(over="ignore"):
        x = state.m + state.sigma * pipe.draw(state.n)
    fx = obj(x)
    success = fx <= state.f_m
    state.sigma *= math.exp((success - 0.2) / state.d)
    if success:
        state.m = x
        state.f_m = fx
    if not math.isfinite(state.sigma):
        raise Diverged()
    return state


# -- (mu/mu, lambda)-sigmaSA-ES ------------------------------------------------


@dataclass
class SigmaSAState:
    m: np.ndarray
    sigma: np.ndarray
    lam: int
    mu: int
    tau: float
    tau_i: float

    @property
    def n(self) -> int:
        return self.m.size


def init_sigma_sa(x0, sigma0) -> SigmaSAState:
    m = np.array(x0, dtype=float)
    n = m.size
    lam = 5 * n
    return SigmaSAState(
        m=m,
        sigma=np.broadcast_to(np.asarray(sigma0, dtype=float), (n,)).copy(),
        lam=lam,
        mu=max(1, lam // 4),
        tau=1.0 / math.sqrt(n),
        tau_i=1.0 / n**0.25,
    )


def sigma_sa_step(state: SigmaSAState, pipe: MutationPipeline, obj: EvalBudgetedObjective) -> SigmaSAState:
    """One generation: lambda offspring, comma selection, intermediate recombination.

    Step-size noise is lognormal with Gaussian exponents whatever the
    pipeline's distribution; only the object variables use ``pipe``.
    """
    if obj.remaining <= 0:
        raise BudgetExhausted()
    n, lam = state.n, state.lam
    noise = pipe.aux_rng
    sigmas = state.sigma * np.exp(state.tau_i * noise.standard_normal((lam, n))) * np.exp(
        state.tau * noise.standard_normal((lam, 1))
    )
    with np.errstate(over="ignore", invalid="ignore"):
        X = state.m + sigmas * pipe.sample(n, lam)
    f = obj.evaluate_batch(X)
    if f.size < lam:
        raise BudgetExhausted()
    best = _rank(f)[: state.mu]
    state.m = X[best].mean(axis=0)
    state.sigma = sigmas[best].mean(axis=0)
    if not np.all(np.isfinite(state.sigma)):
        raise Diverged()
    return state


# -- CMA-ES --------------------------------------------------------------------


@dataclass
class CmaState:
    m: np.ndarray
    sigma: float
    C: np.ndarray
    A: np.ndarray
    A_inv: np.ndarray
    inv_sqrt_C: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    weights: np.ndarray
    lam: int
    mu: int
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    c_m: float
    rho: float
    elitist: bool = False
    parents_x: np.ndarray | None = None
    parents_f: np.ndarray | None = None
    resets: int = 0
    generation: int = 0
    eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.m.size


def cma_constants(n: int, lam: int | None = None) -> dict:
    """Default population size, weights and learning rates for dimension ``n``."""
    lam = int(lam) if lam is not None else 4 + int(math.floor(3 * math.log(n)))
    mu = lam // 2
    w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mu_eff = 1.0 / np.sum(w * w)
    c_sigma = (mu_eff + 2) / (n + mu_eff + 5)
    d_sigma = 1 + 2 * max(0.0, math.sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma
    c_c = (4 + mu_eff / n) / (n + 4 + 2 * mu_eff / n)
    c_1 = 2 / ((n + 1.3) ** 2 + mu_eff)
    alpha_mu = 2.0
    c_mu = min(1 - c_1, alpha_mu * (0.25 + mu_eff + 1 / mu_eff - 2) / ((n + 2) ** 2 + alpha_mu * mu_eff / 2))
    return dict(
        lam=lam,
        mu=mu,
        weights=w,
        mu_eff=float(mu_eff),
        c_sigma=c_sigma,
        d_sigma=d_sigma,
        c_c=c_c,
        c_1=c_1,
        c_mu=c_mu,
        c_m=1.0,
    )


def init_cma(x0, sigma0: float, rho: float, elitist: bool = False, lam: int | None = None) -> CmaState:
    m = np.array(x0, dtype=float)
    n = m.size
    eye = np.eye(n)
    return CmaState(
        m=m,
        sigma=float(sigma0),
        C=eye.copy(),
        A=eye.copy(),
        A_inv=eye.copy(),
        inv_sqrt_C=eye.copy(),
        p_sigma=np.zeros(n),
        p_c=np.zeros(n),
        rho=float(rho),
        elitist=elitist,
        eigenvalues=np.ones(n),
        **cma_constants(n, lam),
    )


def decompose(state: CmaState) -> None:
    """Refresh ``A = B D`` from ``C = B D^2 B^T`` along with ``A^-1`` and ``C^-1/2``.

    Eigenvalues are floored at ``EIGEN_FLOOR`` times the largest one. If the
    matrix is beyond repair (non-finite, or no positive eigenvalue) the
    covariance is reset to the identity and the event is counted.
    """
    C = 0.5 * (state.C + state.C.T)
    ok = bool(np.all(np.isfinite(C)))
    if ok:
        try:
            evals, B = np.linalg.eigh(C)
        except np.linalg.LinAlgError:
            ok = False
    if ok:
        top = evals.max()
        ok = top > 0 and math.isfinite(top)
    if not ok:
        log.warning("covariance matrix degenerate at generation %d; resetting to identity", state.generation)
        state.resets += 1
        n = state.n
        state.C, state.A, state.A_inv, state.inv_sqrt_C = np.eye(n), np.eye(n), np.eye(n), np.eye(n)
        state.p_c = np.zeros(n)
        state.eigenvalues = np.ones(n)
        return
    evals = np.maximum(evals, EIGEN_FLOOR * top)
    D = np.sqrt(evals)
    state.C = (B * evals) @ B.T
    state.A = B * D
    state.A_inv = (B / D).T
    state.inv_sqrt_C = (B / D) @ B.T
    state.eigenvalues = evals


def cma_step(state: CmaState, pipe: MutationPipeline, obj: EvalBudgetedObjective) -> CmaState:
    """One generation of (elitist) CMA-ES."""
    if obj.remaining <= 0:
        raise BudgetExhausted()
    n, lam, mu = state.n, state.lam, state.mu
    Y = pipe.sample(n, lam) @ state.A.T
    with np.errstate(over="ignore", invalid="ignore"):
        X = state.m + state.sigma * Y
    f = obj.evaluate_batch(X)
    if f.size < lam:
        raise BudgetExhausted()

    if state.elitist and state.parents_x is not None:
        # parents are older, so they win ties; their steps are re-expressed
        # relative to the current mean and step size
        X = np.vstack((state.parents_x, X))
        f = np.concatenate((state.parents_f, f))
        Y = np.vstack(((state.parents_x - state.m) / state.sigma, Y))
    sel = _rank(f)[:mu]
    Y_sel = Y[sel]
    w = state.weights
    y_w = w @ Y_sel

    cs, cc, c1, cmu = state.c_sigma, state.c_c, state.c_1, state.c_mu
    state.m = state.m + state.c_m * state.sigma * y_w
    # C^-1/2 y_w has the norm of A^-1 y_w but stays in a fixed frame
    # across generations, unlike the eigenbasis coordinates of A^-1
    state.p_sigma = (1 - cs) * state.p_sigma + math.sqrt(cs * (2 - cs) * state.mu_eff) * (state.inv_sqrt_C @ y_w)
    exponent = cs / state.d_sigma * (np.linalg.norm(state.p_sigma) / state.rho - 1)
    if exponent > 700.0:
        raise Diverged()
    state.sigma *= math.exp(exponent)
    state.p_c = (1 - cc) * state.p_c + math.sqrt(cc * (2 - cc) * state.mu_eff) * y_w
    # overflow here leaves a non-finite C, which decompose() resets
    with np.errstate(over="ignore", invalid="ignore"):
        rank_mu = (Y_sel.T * w) @ Y_sel
        state.C = (1 - c1 - cmu * w.sum()) * state.C + c1 * np.outer(state.p_c, state.p_c) + cmu * rank_mu
    state.generation += 1
    decompose(state)

    if state.elitist:
        state.parents_x = X[sel]
        state.parents_f = f[sel]
    if not (math.isfinite(state.sigma) and np.all(np.isfinite(state.m))):
        raise Diverged()
    return state


# -- driver --------------------------------------------------------------------


def default_rho(pipe: MutationPipeline, n: int) -> float:
    """Path-length reference for a pipeline; unit-length mutations use 1."""
    if pipe.mode is Mode.NORMALIZED:
        return 1.0
    return dists.norm_normalizer(pipe.spec, n)


def run(
    algorithm: str,
    pipe: MutationPipeline,
    obj: EvalBudgetedObjective,
    x0=None,
    sigma0=None,
    rho: float | None = None,
    callback=None,
    header: dict | None = None,
) -> RunLog:
    """Optimize until the budget is spent or the target precision is reached.

    Parameters
    ----------
    algorithm : str
        One of :data:`ALGORITHMS`.
    x0 : array_like, optional
        Start point; the centre of the domain by default.
    sigma0 : float or array_like, optional
        Initial step size, see :data:`DEFAULT_SIGMA0`.
    rho : float, optional
        CMA path-length reference overriding :func:`default_rho`.
    callback : callable, optional
        Called as ``callback(state, obj)`` after every step.
    header : dict, optional
        Extra metadata (e.g. ``run_seed``) merged into the log header.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    n = obj.n
    if x0 is None:
        x0 = center_start(obj.problem) if isinstance(obj.problem, ProblemInstance) else np.zeros(n)
    if sigma0 is None:
        sigma0 = DEFAULT_SIGMA0[algorithm]

    head = {
        "algorithm": algorithm,
        "distribution": pipe.spec.name,
        "mode": pipe.mode.value,
        "n": n,
        "sigma0": np.asarray(sigma0, dtype=float).tolist(),
        "budget": obj.budget,
    }
    if isinstance(obj.problem, ProblemInstance):
        head["function_id"] = obj.problem.function_id.value
        head["instance_seed"] = obj.problem.instance_seed
    head.update(header or {})
    obj.log.header.update(head)

    try:
        if algorithm == "one-plus-one":
            state = init_one_plus_one(x0, sigma0, obj)
            step = one_plus_one_step
        elif algorithm == "sigma-sa":
            state = init_sigma_sa(x0, sigma0)
            step = sigma_sa_step
        else:
            if rho is None:
                rho = default_rho(pipe, n)
            state = init_cma(x0, sigma0, rho, elitist=algorithm == "cma-plus")
            step = cma_step
        if callback is not None:
            callback(state, obj)
        while not obj.done:
            step(state, pipe, obj)
            if callback is not None:
                callback(state, obj)
        reason = "target" if obj.target_hit else "budget"
    except Terminated as exc:
        reason = "target" if obj.target_hit else exc.reason
    obj.log.header["termination"] = reason
    obj.log.header["evals_used"] = obj.evals_used
    return obj.log
