"""Closed-form kernels for the six symmetric mutation distributions.

Every distribution is centred at zero and frozen at a single
parameterization: unit variance for all kinds except Cauchy, which uses
the standard (unit scale) form. The global step size of a strategy carries
all scaling, so none of these parameters are user-settable.

All kernels accept scalars or numpy arrays and broadcast elementwise.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT3 = math.sqrt(3.0)
EULER_GAMMA = 0.5772156649015329

# Median of ||z||_2 / n for i.i.d. standard Cauchy components, read off the
# large-n limit of the step-length probe (re-estimate with
# ``sampling.norm_statistics(CAUCHY, n, ...)``).
CAUCHY_NORM_MEDIAN_SLOPE = 1.18


class Kind(str, enum.Enum):
    CAUCHY = "cauchy"
    DWEIBULL = "dweibull"
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    LOGISTIC = "logistic"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float


@dataclass(frozen=True)
class DistributionSpec:
    """One of the six mutation distributions with its fixed parameters."""

    kind: Kind

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def params(self) -> dict[str, float]:
        return _PARAMS[self.kind]

    @property
    def finite_variance(self) -> bool:
        return self.kind is not Kind.CAUCHY

    @property
    def support(self) -> tuple[float, float]:
        if self.kind is Kind.UNIFORM:
            return (-SQRT3, SQRT3)
        return (-math.inf, math.inf)

    def ppf(self, p):
        return ppf(self, p)

    def pdf(self, x):
        return pdf(self, x)

    def cdf(self, x):
        return cdf(self, x)

    def __str__(self):
        return self.kind.value


_PARAMS = {
    Kind.CAUCHY: {"x0": 0.0, "eta": 1.0},
    Kind.DWEIBULL: {"alpha": 1.0, "beta": 2.0},
    Kind.GAUSSIAN: {"mu": 0.0, "sigma": 1.0},
    Kind.LAPLACE: {"mu": 0.0, "b": 1.0 / math.sqrt(2.0)},
    Kind.LOGISTIC: {"mu": 0.0, "s": SQRT3 / math.pi},
    Kind.UNIFORM: {"a": -SQRT3, "b": SQRT3},
}

CAUCHY = DistributionSpec(Kind.CAUCHY)
DWEIBULL = DistributionSpec(Kind.DWEIBULL)
GAUSSIAN = DistributionSpec(Kind.GAUSSIAN)
LAPLACE = DistributionSpec(Kind.LAPLACE)
LOGISTIC = DistributionSpec(Kind.LOGISTIC)
UNIFORM = DistributionSpec(Kind.UNIFORM)

ALL = (CAUCHY, DWEIBULL, GAUSSIAN, LAPLACE, LOGISTIC, UNIFORM)
FINITE_VARIANCE = tuple(d for d in ALL if d.finite_variance)


def get(name) -> DistributionSpec:
    """Look up a distribution by its lowercase name (``"laplace"`` etc.)."""
    if isinstance(name, DistributionSpec):
        return name
    try:
        return DistributionSpec(Kind(str(name).lower()))
    except ValueError:
        valid = ", ".join(k.value for k in Kind)
        raise ValueError(f"unknown distribution {name!r}; expected one of {valid}") from None


def _as_spec(spec) -> DistributionSpec:
    return spec if isinstance(spec, DistributionSpec) else get(spec)


def ppf(spec, p):
    """Percent point function (inverse CDF) on the open interval (0, 1).

    The two-sided kinds are evaluated through the smaller tail mass
    ``q = min(p, 1 - p)`` so that deviates near either end keep full
    precision; ``ppf(0.5)`` is exactly 0 for every kind.

    Raises
    ------
    ValueError
        If any ``p`` lies outside (0, 1).
    """
    spec = _as_spec(spec)
    p_arr = np.asarray(p, dtype=float)
    if not np.all((p_arr > 0.0) & (p_arr < 1.0)):
        raise ValueError("ppf is defined for 0 < p < 1 only")
    out = _PPF[spec.kind](p_arr)
    return out if out.ndim else float(out)


def _tail(p):
    # q is the mass of the nearer tail; q = 0.5 at the median gives 0
    sign = np.sign(p - 0.5)
    q = np.where(p < 0.5, p, 1.0 - p)
    return sign, q


def _ppf_cauchy(p):
    return np.tan(np.pi * (p - 0.5))


def _ppf_dweibull(p):
    sign, q = _tail(p)
    return sign * np.sqrt(-np.log(2.0 * q))


def _ppf_gaussian(p):
    return special.ndtri(p)


def _ppf_laplace(p):
    sign, q = _tail(p)
    return -sign * _PARAMS[Kind.LAPLACE]["b"] * np.log(2.0 * q)


def _ppf_logistic(p):
    return _PARAMS[Kind.LOGISTIC]["s"] * special.logit(p)


def _ppf_uniform(p):
    # symmetric form keeps ppf(1 - p) == -ppf(p)
    return 2.0 * SQRT3 * (p - 0.5)


_PPF = {
    Kind.CAUCHY: _ppf_cauchy,
    Kind.DWEIBULL: _ppf_dweibull,
    Kind.GAUSSIAN: _ppf_gaussian,
    Kind.LAPLACE: _ppf_laplace,
    Kind.LOGISTIC: _ppf_logistic,
    Kind.UNIFORM: _ppf_uniform,
}


def pdf(spec, x):
    spec = _as_spec(spec)
    x = np.asarray(x, dtype=float)
    k = spec.kind
    if k is Kind.CAUCHY:
        out = 1.0 / (np.pi * (1.0 + x * x))
    elif k is Kind.DWEIBULL:
        out = np.abs(x) * np.exp(-x * x)
    elif k is Kind.GAUSSIAN:
        out = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    elif k is Kind.LAPLACE:
        b = _PARAMS[k]["b"]
        out = np.exp(-np.abs(x) / b) / (2.0 * b)
    elif k is Kind.LOGISTIC:
        s = _PARAMS[k]["s"]
        e = np.exp(-np.abs(x) / s)
        out = e / (s * (1.0 + e) ** 2)
    else:
        out = np.where(np.abs(x) <= SQRT3, 1.0 / (2.0 * SQRT3), 0.0)
    return out if out.ndim else float(out)


def cdf(spec, x):
    spec = _as_spec(spec)
    x = np.asarray(x, dtype=float)
    k = spec.kind
    if k is Kind.CAUCHY:
        out = 0.5 + np.arctan(x) / np.pi
    elif k is Kind.DWEIBULL:
        # lower tail computed directly to avoid 1 - (1 - tiny)
        lower = 0.5 * np.exp(-x * x)
        out = np.where(x < 0, lower, 1.0 - lower)
    elif k is Kind.GAUSSIAN:
        out = special.ndtr(x)
    elif k is Kind.LAPLACE:
        lower = 0.5 * np.exp(-np.abs(x) / _PARAMS[k]["b"])
        out = np.where(x < 0, lower, 1.0 - lower)
    elif k is Kind.LOGISTIC:
        out = special.expit(x / _PARAMS[k]["s"])
    else:
        out = np.clip((x + SQRT3) / (2.0 * SQRT3), 0.0, 1.0)
    return out if out.ndim else float(out)


def entropy(spec) -> float:
    """Differential entropy in nats."""
    spec = _as_spec(spec)
    k = spec.kind
    if k is Kind.CAUCHY:
        return math.log(4.0 * math.pi * _PARAMS[k]["eta"])
    if k is Kind.DWEIBULL:
        beta = _PARAMS[k]["beta"]
        return -EULER_GAMMA / beta - math.log(beta) + EULER_GAMMA + 1.0 - math.log(0.5)
    if k is Kind.GAUSSIAN:
        return 0.5 * math.log(2.0 * math.pi * math.e * _PARAMS[k]["sigma"] ** 2)
    if k is Kind.LAPLACE:
        return math.log(2.0 * _PARAMS[k]["b"]) + 1.0
    if k is Kind.LOGISTIC:
        return math.log(_PARAMS[k]["s"]) + 2.0
    return math.log(2.0 * SQRT3)


def moments(spec) -> MomentSummary:
    """Mean, variance, skewness and excess kurtosis in closed form.

    Cauchy has no finite moments; its mean and skewness are reported as
    ``nan`` (undefined) and its variance and kurtosis as ``inf``.
    """
    spec = _as_spec(spec)
    k = spec.kind
    if k is Kind.CAUCHY:
        return MomentSummary(math.nan, math.inf, math.nan, math.inf)
    if k is Kind.DWEIBULL:
        alpha, beta = _PARAMS[k]["alpha"], _PARAMS[k]["beta"]
        g2 = math.gamma(1.0 + 2.0 / beta)
        return MomentSummary(0.0, alpha**2 * g2, 0.0, math.gamma(1.0 + 4.0 / beta) / g2**2 - 3.0)
    if k is Kind.GAUSSIAN:
        return MomentSummary(0.0, _PARAMS[k]["sigma"] ** 2, 0.0, 0.0)
    if k is Kind.LAPLACE:
        return MomentSummary(0.0, 2.0 * _PARAMS[k]["b"] ** 2, 0.0, 3.0)
    if k is Kind.LOGISTIC:
        return MomentSummary(0.0, _PARAMS[k]["s"] ** 2 * math.pi**2 / 3.0, 0.0, 6.0 / 5.0)
    a, b = _PARAMS[k]["a"], _PARAMS[k]["b"]
    return MomentSummary((a + b) / 2.0, (b - a) ** 2 / 12.0, 0.0, -6.0 / 5.0)


def norm_normalizer(spec, n: int) -> float:
    """Reference length of ``||z||_2`` used to normalize evolution paths.

    ``sqrt(n)`` for the finite-variance kinds, ``1.18 n`` for Cauchy whose
    step length grows linearly with the dimension.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = _as_spec(spec)
    if spec.kind is Kind.CAUCHY:
        return CAUCHY_NORM_MEDIAN_SLOPE * n
    return math.sqrt(n)
