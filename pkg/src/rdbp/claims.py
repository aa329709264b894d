"""Claim distributions and their cost functionals.

Every individual submits a random resource claim drawn from its
sub-population's distribution F. Serving only claims up to a threshold t
costs, per submitted claim,

    cost(t) = integral of x dF(x) over [0, t],

which rises from 0 at the bottom of the support to the distribution mean
at the top. Three families are supported: Beta(a, b) on [0, 1], Uniform
on [lo, hi], and Empirical (a finite sample treated as a step CDF).
Beta quantities are evaluated through the regularized incomplete beta
ratio; the cost uses the identity

    cost(t) = mean * I_t(a + 1, b),

with I the regularized incomplete beta function.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy import special

__all__ = [
    "Beta",
    "Uniform",
    "Empirical",
    "ClaimDistribution",
    "CostVector",
    "cdf",
    "cost",
    "mean",
    "support",
    "sample",
    "is_continuous",
    "cost_vector",
    "contour_cost",
    "CONTOUR_TAGS",
]


@dataclass(frozen=True)
class Beta:
    """Beta(a, b) claim distribution on (0, 1]."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"Beta shapes must be positive, got a={self.a}, b={self.b}")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, 1.0)

    def cdf(self, t):
        t = np.clip(t, 0.0, 1.0)
        return special.betainc(self.a, self.b, t)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        logpdf = (
            (self.a - 1.0) * np.log(t)
            + (self.b - 1.0) * np.log1p(-t)
            - special.betaln(self.a, self.b)
        )
        return np.exp(logpdf)

    def cost(self, t):
        t = np.clip(t, 0.0, 1.0)
        return self.mean * special.betainc(self.a + 1.0, self.b, t)

    def sample(self, rng: np.random.Generator, n: int):
        return rng.beta(self.a, self.b, size=n)


@dataclass(frozen=True)
class Uniform:
    """Uniform claim distribution on [lo, hi], lo >= 0."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi):
            raise ValueError(f"Uniform needs 0 <= lo < hi, got lo={self.lo}, hi={self.hi}")

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip((t - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def cost(self, t):
        t = np.clip(t, self.lo, self.hi)
        return (np.square(t) - self.lo * self.lo) / (2.0 * (self.hi - self.lo))

    def sample(self, rng: np.random.Generator, n: int):
        return rng.uniform(self.lo, self.hi, size=n)


@dataclass(frozen=True)
class Empirical:
    """Step-CDF distribution over a finite sample of positive claims.

    Resampling draws with replacement. The step CDF violates the
    continuity the equilibrium theory assumes, so the solver rejects
    this kind; the simulator accepts it.
    """

    samples: tuple[float, ...]

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("Empirical needs at least one sample")
        if any(not (s > 0) for s in self.samples):
            raise ValueError("Empirical samples must all be positive")

    @cached_property
    def _sorted(self) -> np.ndarray:
        return np.sort(np.asarray(self.samples, dtype=float))

    @cached_property
    def _prefix(self) -> np.ndarray:
        return np.cumsum(self._sorted)

    @property
    def mean(self) -> float:
        return float(self._prefix[-1] / len(self.samples))

    @property
    def support(self) -> tuple[float, float]:
        return (float(self._sorted[0]), float(self._sorted[-1]))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._sorted, t, side="right")
        return idx / len(self.samples)

    def cost(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._sorted, t, side="right")
        prefix = np.concatenate(([0.0], self._prefix))
        return prefix[idx] / len(self.samples)

    def sample(self, rng: np.random.Generator, n: int):
        return self._sorted[rng.integers(0, len(self.samples), size=n)]


ClaimDistribution = Union[Beta, Uniform, Empirical]


def _maybe_scalar(x, scalar: bool):
    return float(x) if scalar else np.asarray(x, dtype=float)


def cdf(d: ClaimDistribution, t):
    """F(t), the probability that a claim does not exceed t."""
    scalar = np.isscalar(t)
    return _maybe_scalar(d.cdf(t), scalar)


def cost(d: ClaimDistribution, t):
    """Expected resources spent per claim when serving claims up to t."""
    scalar = np.isscalar(t)
    return _maybe_scalar(d.cost(t), scalar)


def mean(d: ClaimDistribution) -> float:
    return d.mean


def support(d: ClaimDistribution) -> tuple[float, float]:
    return d.support


def is_continuous(d: ClaimDistribution) -> bool:
    return not isinstance(d, Empirical)


def sample(d: ClaimDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    """n independent draws from d, consuming only the supplied generator."""
    if n < 0:
        raise ValueError("sample size must be >= 0")
    return d.sample(rng, n)


@dataclass(frozen=True)
class CostVector:
    """Per-class cost functionals evaluated at one common threshold."""

    psi_h: float
    psi_i: float
    psi_ni: float

    def as_array(self) -> np.ndarray:
        return np.array([self.psi_h, self.psi_i, self.psi_ni])


def cost_vector(ds: tuple[ClaimDistribution, ClaimDistribution, ClaimDistribution], t: float) -> CostVector:
    """Componentwise cost for the (home, immigrant, new-immigrant) triple."""
    dh, di, dni = ds
    return CostVector(float(cost(dh, t)), float(cost(di, t)), float(cost(dni, t)))


# Which class takes the second threshold in the two-variable summarized cost.
CONTOUR_TAGS = ("h", "i", "ni")


def contour_cost(ds, which_varies: str, x, y):
    """Summarized cost with one class at threshold y and the other two at x.

    ``which_varies`` names the class evaluated at y; the remaining two
    classes are evaluated at the shared threshold x.
    """
    if which_varies not in CONTOUR_TAGS:
        raise ValueError(f"which_varies must be one of {CONTOUR_TAGS}, got {which_varies!r}")
    dh, di, dni = ds
    tx = {"h": x, "i": x, "ni": x}
    tx[which_varies] = y
    return cost(dh, tx["h"]) + cost(di, tx["i"]) + cost(dni, tx["ni"])
