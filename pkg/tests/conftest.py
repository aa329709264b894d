"""Shared oracles and scenario builders.

The quadrature helpers are deliberately independent of the library's
incomplete-beta evaluation path: beta densities are built from lgamma
and integrated with composite Gauss-Legendre rules.
"""

import math

import numpy as np
import pytest

from rdbp import (
    Beta,
    EquilibriumProblem,
    NoImmigration,
    PopulationState,
    ScenarioParams,
    SubPopulationSpec,
    Uniform,
)
from rdbp.simulator import truncated_poisson_pmf


def beta_pdf(a: float, b: float, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    lognorm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    with np.errstate(divide="ignore"):
        out = np.exp(lognorm + (a - 1) * np.log(x) + (b - 1) * np.log1p(-x))
    return np.where((x <= 0) | (x >= 1), 0.0, out)


def gauss_legendre_integral(f, lo: float, hi: float, n_panels: int = 8, order: int = 24) -> float:
    """Composite Gauss-Legendre quadrature of f over [lo, hi]."""
    if hi <= lo:
        return 0.0
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    total = 0.0
    for k in range(n_panels):
        mid = 0.5 * (edges[k] + edges[k + 1])
        half = 0.5 * (edges[k + 1] - edges[k])
        total += half * np.sum(weights * f(mid + half * nodes))
    return float(total)


def quad_beta_cost(a: float, b: float, t: float) -> float:
    t = min(max(t, 0.0), 1.0)
    return gauss_legendre_integral(lambda x: x * beta_pdf(a, b, x), 0.0, t)


def quad_beta_cdf(a: float, b: float, t: float) -> float:
    t = min(max(t, 0.0), 1.0)
    return gauss_legendre_integral(lambda x: beta_pdf(a, b, x), 0.0, t)


def mc_expected_served(dists, counts, s, replications, rng, chunk=2000):
    """Monte Carlo estimate of the expected weakest-first served count.

    Returns (mean, standard error). Vectorized: one row per replication,
    claims sorted within the row, prefix sums compared to the budget.
    """
    z = int(sum(counts))
    means = []
    done = 0
    sq = 0.0
    tot = 0.0
    while done < replications:
        m = min(chunk, replications - done)
        cols = []
        for d, c in zip(dists, counts):
            if c:
                cols.append(d.sample(rng, m * int(c)).reshape(m, int(c)))
        block = np.concatenate(cols, axis=1) if cols else np.zeros((m, 0))
        block.sort(axis=1)
        served = (np.cumsum(block, axis=1) <= s).sum(axis=1)
        tot += served.sum()
        sq += np.square(served).sum()
        done += m
        means.append(served)
    mean = tot / replications
    var = sq / replications - mean * mean
    se = math.sqrt(max(var, 0.0) / replications)
    return mean, se


BASELINE_BETAS = (Beta(6, 2), Beta(2, 3), Beta(2, 7))


def baseline_problem(**overrides) -> EquilibriumProblem:
    """Reference scenario: the documented beta triple with its means."""
    kw = dict(
        claims_h=Beta(6, 2),
        claims_i=Beta(2, 3),
        claims_ni=Beta(2, 7),
        m_h=3.5,
        m_i=2.8,
        m_ni=2.0,
        r_h=2.0,
        r_i=0.6,
        r_ni=0.5,
        ell_ni=0.0,
    )
    kw.update(overrides)
    return EquilibriumProblem(**kw)


def swapped_problem() -> EquilibriumProblem:
    """Baseline with home/immigrant claim distributions and productions exchanged."""
    return baseline_problem(
        claims_h=Beta(2, 3), claims_i=Beta(6, 2), r_h=0.6, r_i=2.0
    )


def make_spec(mean: float, production: float, claims) -> SubPopulationSpec:
    return SubPopulationSpec(
        offspring_pmf=tuple(truncated_poisson_pmf(mean)),
        production_mean=production,
        claims=claims,
    )


def single_class_params(
    mean=1.3,
    production=1000.0,
    g0=200,
    generations=12,
    replications=500,
    seed=101,
    claims=None,
) -> ScenarioParams:
    """Model without immigrants: only the home class is populated."""
    claims = claims or Uniform(0.0, 1.0)
    spec = make_spec(mean, production, claims)
    return ScenarioParams(
        spec_h=spec,
        spec_i=make_spec(1.0, production, claims),
        spec_ni=make_spec(1.0, production, claims),
        phi=0.0,
        immigration=NoImmigration(),
        initial=PopulationState(g0, 0, 0, g0 * production),
        max_generations=generations,
        replications=replications,
        master_seed=seed,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
