"""Inverse-transform mutation sampling and the step-length / isotropy probes.

A mutation vector is produced in three stages: draw ``u ~ U(0, 1)^n``,
map it through a distribution's PPF to get ``z``, then transform
``x = m + sigma * A @ z``. :class:`MutationPipeline` covers the first two
stages and optionally decouples the direction of ``z`` from its length:

``plain``
    components of ``z`` are i.i.d. draws of the chosen distribution.
``normalized``
    ``z / ||z||``; only the direction of the distribution survives.
``swapped``
    a uniformly random (Gaussian) direction scaled to ``||z||``; only the
    length distribution survives.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import distributions as dists

_TINY = np.nextafter(0.0, 1.0)


class Mode(str, enum.Enum):
    PLAIN = "plain"
    NORMALIZED = "normalized"
    SWAPPED = "swapped"


class UndersampledHistogramWarning(UserWarning):
    pass


def substream(seed, *keys) -> np.random.SeedSequence:
    """Seed sequence for the substream keyed by ``keys`` under ``seed``.

    Streams with distinct key tuples are statistically independent, and a
    given ``(seed, keys)`` always reproduces the same stream regardless of
    what other streams were created.
    """
    return np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform deviates on the open interval (0, 1)."""
    u = rng.random(size)
    # Generator.random is [0, 1); only 0 needs nudging
    u[u == 0.0] = _TINY
    return u


class MutationPipeline:
    """Stateful source of raw mutation vectors ``z``.

    Parameters
    ----------
    spec : DistributionSpec or str
        Distribution whose PPF turns uniform deviates into ``z``.
    mode : Mode or str
        ``plain``, ``normalized`` or ``swapped`` (see module docstring).
    seed : int or SeedSequence
        Root of the pipeline's random streams. Three independent children
        are spawned: the object-variable stream, the direction stream used
        by ``swapped`` mode, and an auxiliary Gaussian stream that
        strategies use for their own noise (e.g. lognormal step sizes).
    block : int
        Number of vectors drawn at once by :meth:`draw`.
    """

    def __init__(self, spec, mode=Mode.PLAIN, seed=None, block: int = 256):
        self.spec = dists.get(spec)
        self.mode = Mode(mode)
        ss = _seed_sequence(seed)
        self.seed_sequence = ss
        obj_ss, dir_ss, aux_ss = ss.spawn(3)
        self.rng = np.random.Generator(np.random.PCG64(obj_ss))
        self.direction_rng = np.random.Generator(np.random.PCG64(dir_ss))
        self.aux_rng = np.random.Generator(np.random.PCG64(aux_ss))
        self.block = int(block)
        self._buffer = None
        self._pos = 0

    def __repr__(self):
        return f"MutationPipeline({self.spec.name!r}, mode={self.mode.value!r})"

    def sample(self, n: int, size: int | None = None) -> np.ndarray:
        """Draw ``size`` mutation vectors of dimension ``n``.

        Returns an array of shape ``(n,)`` when ``size`` is None, otherwise
        ``(size, n)``.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        rows = 1 if size is None else int(size)
        z = self._raw(rows, n)
        return z[0] if size is None else z

    def draw(self, n: int) -> np.ndarray:
        """One vector of dimension ``n``, served from a pre-drawn block.

        Cheaper than ``sample(n)`` in tight single-offspring loops. The
        block is discarded if ``n`` changes.
        """
        buf = self._buffer
        if buf is None or self._pos >= buf.shape[0] or buf.shape[1] != n:
            buf = self._buffer = self._raw(self.block, n)
            self._pos = 0
        z = buf[self._pos]
        self._pos += 1
        return z

    def _raw(self, rows: int, n: int) -> np.ndarray:
        u = open_uniform(self.rng, (rows, n))
        z = dists.ppf(self.spec, u)
        if self.mode is Mode.PLAIN:
            return z
        if self.mode is Mode.NORMALIZED:
            return direction_normalize(z)
        return isotropize_magnitude(z, self.direction_rng)


def sample_z(pipe: MutationPipeline, n: int) -> np.ndarray:
    """One raw mutation vector of dimension ``n`` from ``pipe``."""
    return pipe.sample(n)


def direction_normalize(z) -> np.ndarray:
    """Scale each row of ``z`` to unit Euclidean length."""
    z = np.asarray(z, dtype=float)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def isotropize_magnitude(z, rng: np.random.Generator) -> np.ndarray:
    """Keep the length of each row of ``z`` but give it a uniformly random direction."""
    z = np.asarray(z, dtype=float)
    v = direction_normalize(rng.standard_normal(z.shape))
    return v * np.linalg.norm(z, axis=-1, keepdims=True)


def transform(z, m, sigma, A=None) -> np.ndarray:
    """Map raw mutations to search points, ``m + sigma * A @ z``.

    ``z`` may be a single vector or a ``(k, n)`` stack of row vectors.
    ``sigma`` may be a scalar or a per-coordinate vector.
    """
    z = np.asarray(z, dtype=float)
    y = z if A is None else z @ np.asarray(A, dtype=float).T
    return np.asarray(m, dtype=float) + np.asarray(sigma, dtype=float) * y


def expected_norm_gaussian(n: int) -> float:
    """Mean of the chi distribution with ``n`` degrees of freedom."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.sqrt(2.0) * math.exp(special.gammaln((n + 1) / 2.0) - special.gammaln(n / 2.0))


@dataclass(frozen=True)
class NormStats:
    n: int
    mean: float
    std: float
    median: float
    iqr: float
    samples_used: int


def sample_norms(spec, n: int, samples: int, seed=0, mode=Mode.PLAIN, chunk: int = 2**22) -> np.ndarray:
    """``||z||_2`` for ``samples`` independent draws, generated in chunks."""
    pipe = MutationPipeline(spec, mode, seed)
    rows = max(1, chunk // n)
    out = np.empty(samples)
    for start in range(0, samples, rows):
        stop = min(samples, start + rows)
        out[start:stop] = np.linalg.norm(pipe.sample(n, stop - start), axis=1)
    return out


def norm_statistics(spec, n: int, samples: int = 10**6, seed=0) -> NormStats:
    """Monte-Carlo summary of the effective step length ``||z||_2``."""
    if samples < 1000:
        raise ValueError("norm_statistics needs at least 1000 samples")
    norms = sample_norms(spec, n, samples, seed)
    q1, med, q3 = np.percentile(norms, [25, 50, 75])
    return NormStats(
        n=n,
        mean=float(norms.mean()),
        std=float(norms.std(ddof=1)),
        median=float(med),
        iqr=float(q3 - q1),
        samples_used=samples,
    )


def angles_to_ones(z: np.ndarray) -> np.ndarray:
    """Angle in degrees between each row of ``z`` and the all-ones vector.

    For ``n == 2`` the angle is signed, measured counter-clockwise from
    ``(1, 1)`` and wrapped to [0, 360). For ``n > 2`` there is no canonical
    orientation of the plane spanned by a sample and the ones vector, so
    the unsigned angle in [0, 180] is returned.
    """
    z = np.atleast_2d(z)
    n = z.shape[1]
    if n < 2:
        raise ValueError("angles need n >= 2")
    if n == 2:
        theta = np.degrees(np.arctan2(z[:, 1], z[:, 0])) - 45.0
        return np.mod(theta, 360.0)
    cos = z.sum(axis=1) / (np.linalg.norm(z, axis=1) * math.sqrt(n))
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def angle_to_ones_histogram(spec, n: int = 2, samples: int = 10**5, bins: int = 64, mode=Mode.PLAIN, seed=0):
    """Normalized histogram of sample angles relative to the ones vector.

    Returns
    -------
    centers : ndarray
        Bin centres in degrees.
    freq : ndarray
        Fraction of samples per bin (sums to 1).
    counts : ndarray
        Raw bin counts, handy for goodness-of-fit tests.
    """
    if samples < bins * 100:
        warnings.warn(
            f"{samples} samples for {bins} bins is under-sampled (< 100 per bin)",
            UndersampledHistogramWarning,
            stacklevel=2,
        )
    z = MutationPipeline(spec, mode, seed).sample(n, samples)
    theta = angles_to_ones(z)
    top = 360.0 if n == 2 else 180.0
    counts, edges = np.histogram(theta, bins=bins, range=(0.0, top))
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, counts / counts.sum(), counts
