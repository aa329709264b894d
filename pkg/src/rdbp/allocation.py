"""Weakest-first allocation of a common resource space.

All submitted claims are merged into one ordered list and the smallest
ones are served until the next claim would overshoot the available
space (strict prefix rule). The expected number of servable claims is
bounded above by the sum of the class CDFs at the budget-exhausting
threshold tau, where tau solves

    nu_h * cost_h(tau) + nu_i * cost_i(tau) + nu_ni * cost_ni(tau) = s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .claims import ClaimDistribution, cdf, cost, mean, support

__all__ = [
    "ClaimLists",
    "MergedList",
    "ServiceResult",
    "BrsResult",
    "merge_and_sort",
    "n_served",
    "brs_tau",
    "expected_accept_and_cost",
]

CLASS_TAGS = ("h", "i", "ni")


@dataclass(frozen=True)
class ClaimLists:
    """Per-class lists of positive claims for one generation."""

    h: np.ndarray
    i: np.ndarray
    ni: np.ndarray

    def __post_init__(self):
        for tag in CLASS_TAGS:
            arr = np.asarray(getattr(self, tag), dtype=float)
            object.__setattr__(self, tag, arr)
            if arr.size and not np.all(arr > 0):
                raise ValueError(f"claims in class {tag!r} must be positive")

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.h.size, self.i.size, self.ni.size)


@dataclass(frozen=True)
class MergedList:
    """Non-decreasing claim values with their class tags (0=h, 1=i, 2=ni)."""

    values: np.ndarray
    tags: np.ndarray

    @property
    def z(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ServiceResult:
    n_served: int
    served_by_class: np.ndarray  # counts (h, i, ni)
    spent: float
    threshold: float  # largest served claim, nan when nothing served


@dataclass(frozen=True)
class BrsResult:
    tau: float
    bound: float  # upper bound on the expected number of served claims
    spent: float


def merge_and_sort(lists: ClaimLists) -> MergedList:
    """Merge the three class lists into one ordered list.

    Stable sort on the concatenation in class order (h, i, ni), so ties
    between equal values are kept in input order.
    """
    values = np.concatenate([lists.h, lists.i, lists.ni])
    tags = np.concatenate(
        [np.full(lists.h.size, 0, dtype=np.int8),
         np.full(lists.i.size, 1, dtype=np.int8),
         np.full(lists.ni.size, 2, dtype=np.int8)]
    )
    order = np.argsort(values, kind="stable")
    return MergedList(values[order], tags[order])


def n_served(m: MergedList, s: float) -> ServiceResult:
    """Largest prefix of the merged list whose sum does not exceed s.

    A claim that would push the running total past s is not served, even
    partially.
    """
    if s < 0:
        raise ValueError("resource space must be >= 0")
    if m.z == 0:
        return ServiceResult(0, np.zeros(3, dtype=np.int64), 0.0, float("nan"))
    prefix = np.cumsum(m.values)
    k = int(np.searchsorted(prefix, s, side="right"))
    served = np.bincount(m.tags[:k], minlength=3).astype(np.int64)
    spent = float(prefix[k - 1]) if k > 0 else 0.0
    threshold = float(m.values[k - 1]) if k > 0 else float("nan")
    return ServiceResult(k, served, spent, threshold)


def brs_tau(
    ds: tuple[ClaimDistribution, ClaimDistribution, ClaimDistribution],
    counts: tuple[int, int, int],
    s: float,
    *,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> BrsResult:
    """Budget-exhausting threshold tau and the served-count upper bound.

    Bisection on the non-decreasing map tau -> sum(nu_d * cost_d(tau))
    over the pooled claim support. When s covers the total expected
    claim mass the budget is not binding and tau sits at the top of the
    pooled support.
    """
    counts = tuple(int(c) for c in counts)
    if any(c < 0 for c in counts):
        raise ValueError("claim counts must be >= 0")
    if sum(counts) == 0:
        raise ValueError("empty population")
    if s < 0:
        raise ValueError("resource space must be >= 0")

    lo = min(support(d)[0] for d, c in zip(ds, counts) if c > 0)
    hi = max(support(d)[1] for d, c in zip(ds, counts) if c > 0)

    def spent_at(t: float) -> float:
        return sum(c * float(cost(d, t)) for d, c in zip(ds, counts))

    def bound_at(t: float) -> float:
        return sum(c * float(cdf(d, t)) for d, c in zip(ds, counts))

    total_mean = sum(c * mean(d) for d, c in zip(ds, counts))
    if s >= total_mean:
        return BrsResult(hi, bound_at(hi), total_mean)
    if s == 0.0:
        return BrsResult(lo, bound_at(lo), spent_at(lo))

    resid_tol = tol * max(s, 1.0)
    a, b = lo, hi
    tau = a
    for _ in range(max_iter):
        tau = 0.5 * (a + b)
        g = spent_at(tau) - s
        if abs(g) <= resid_tol:
            break
        if g < 0:
            a = tau
        else:
            b = tau
    return BrsResult(tau, bound_at(tau), spent_at(tau))


def expected_accept_and_cost(ds, counts, t: float) -> tuple[float, float]:
    """Expected accepted-claim count and expected cost at threshold t."""
    counts = tuple(int(c) for c in counts)
    if any(c < 0 for c in counts):
        raise ValueError("claim counts must be >= 0")
    accepted = sum(c * float(cdf(d, t)) for d, c in zip(ds, counts))
    spent = sum(c * float(cost(d, t)) for d, c in zip(ds, counts))
    return accepted, spent
