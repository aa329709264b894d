import numpy as np
import pytest

from rdbp import (
    Beta,
    ClaimLists,
    Empirical,
    Uniform,
    brs_tau,
    expected_accept_and_cost,
    merge_and_sort,
    n_served,
)
from rdbp.claims import cdf, cost, mean

from conftest import BASELINE_BETAS, mc_expected_served


def lists(h=(), i=(), ni=()):
    return ClaimLists(np.asarray(h, float), np.asarray(i, float), np.asarray(ni, float))


def test_merge_trivials():
    m = merge_and_sort(lists())
    assert m.z == 0
    m = merge_and_sort(lists(h=[0.5], i=[0.2], ni=[0.1]))
    assert list(m.values) == [0.1, 0.2, 0.5]
    assert list(m.tags) == [2, 1, 0]


def test_merge_equals_concat_sort_oracle(rng):
    for _ in range(50):
        h = rng.uniform(0, 1, rng.integers(0, 8))
        i = rng.uniform(0, 1, rng.integers(0, 8))
        ni = rng.uniform(0, 1, rng.integers(0, 8))
        m = merge_and_sort(lists(h, i, ni))
        oracle = np.sort(np.concatenate([h, i, ni]))
        assert np.array_equal(m.values, oracle)


def test_merge_invariance_presorted_inputs(rng):
    # sorting each class first must not change the merged outcome
    for _ in range(30):
        h = rng.uniform(0, 1, 5)
        i = rng.uniform(0, 1, 4)
        ni = rng.uniform(0, 1, 3)
        a = merge_and_sort(lists(h, i, ni))
        b = merge_and_sort(lists(np.sort(h), np.sort(i), np.sort(ni)))
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.tags, b.tags)


def test_merge_tie_order_is_stable():
    m = merge_and_sort(lists(h=[0.5], i=[0.5], ni=[0.5]))
    assert list(m.tags) == [0, 1, 2]


def test_merge_rejects_nonpositive():
    with pytest.raises(ValueError):
        lists(h=[0.0, 0.5])


def test_n_served_trivials():
    m = merge_and_sort(lists(h=[0.3, 0.7], i=[0.4]))
    assert n_served(m, 0.0).n_served == 0
    full = n_served(m, 10.0)
    assert full.n_served == 3
    assert full.threshold == pytest.approx(0.7)
    assert np.isnan(n_served(merge_and_sort(lists()), 1.0).threshold)


def test_n_served_prefix_example():
    m = merge_and_sort(lists(h=[0.5], i=[0.2], ni=[0.1]))
    svc = n_served(m, 0.35)
    assert svc.n_served == 2
    assert list(svc.served_by_class) == [0, 1, 1]
    assert svc.spent == pytest.approx(0.3)
    assert svc.threshold == pytest.approx(0.2)


def test_n_served_strict_prefix_rule():
    # a claim that would overshoot the budget is not served, even partially
    m = merge_and_sort(lists(h=[1.0, 1.0]))
    assert n_served(m, 1.5).n_served == 1
    assert n_served(m, 2.0).n_served == 2


def test_n_served_matches_exhaustive(rng):
    for _ in range(200):
        z = rng.integers(0, 13)
        vals = rng.uniform(0.01, 1.0, z)
        m = merge_and_sort(lists(h=vals))
        s = float(rng.uniform(0, max(vals.sum(), 0.5) * 1.2))
        svc = n_served(m, s)
        srt = np.sort(vals)
        best = 0
        for k in range(z + 1):
            if srt[:k].sum() <= s:
                best = k
        assert svc.n_served == best
        assert svc.spent <= s


def test_brs_tau_uniform_oracle():
    res = brs_tau((Uniform(0, 1),) * 3, (1, 0, 0), 0.125)
    assert res.tau == pytest.approx(0.5, abs=1e-9)
    assert res.bound == pytest.approx(0.5, abs=1e-9)
    assert res.spent == pytest.approx(0.125, abs=1e-10)


def test_brs_tau_zero_budget():
    res = brs_tau(BASELINE_BETAS, (5, 5, 5), 0.0)
    assert res.tau == pytest.approx(0.0, abs=1e-9)
    assert res.bound == pytest.approx(0.0, abs=1e-6)


def test_brs_tau_slack_budget():
    counts = (3, 4, 5)
    total_mean = sum(c * mean(d) for d, c in zip(BASELINE_BETAS, counts))
    res = brs_tau(BASELINE_BETAS, counts, total_mean * 2)
    assert res.tau == 1.0
    assert res.bound == pytest.approx(sum(counts))
    assert res.spent == pytest.approx(total_mean)


def test_brs_tau_empty_population():
    with pytest.raises(ValueError, match="empty population"):
        brs_tau(BASELINE_BETAS, (0, 0, 0), 1.0)


def test_brs_tau_residual_tolerance(rng):
    for _ in range(20):
        counts = tuple(int(c) for c in rng.integers(1, 40, 3))
        total_mean = sum(c * mean(d) for d, c in zip(BASELINE_BETAS, counts))
        s = float(rng.uniform(0.05, 0.95)) * total_mean
        res = brs_tau(BASELINE_BETAS, counts, s)
        assert abs(res.spent - s) <= 1e-10 * max(s, 1.0)


def test_brs_tau_monotone(rng):
    counts = (10, 10, 10)
    taus = [brs_tau(BASELINE_BETAS, counts, s).tau for s in (0.5, 2.0, 5.0, 9.0)]
    assert all(a <= b + 1e-12 for a, b in zip(taus, taus[1:]))
    for more in ((20, 10, 10), (10, 25, 10), (10, 10, 40)):
        assert brs_tau(BASELINE_BETAS, more, 2.0).tau <= brs_tau(BASELINE_BETAS, counts, 2.0).tau + 1e-12


def test_brs_tau_empirical_inputs():
    d = Empirical((0.2, 0.4, 0.9))
    res = brs_tau((d, d, d), (2, 1, 0), 0.6)
    assert res.spent <= 0.6 + 1e-12


def test_brs_bound_dominates_monte_carlo(rng):
    # quick version of the inequality check; the acceptance suite runs 200 instances
    dist_pool = [Beta(6, 2), Beta(2, 3), Beta(2, 7), Uniform(0, 1), Uniform(0.1, 0.8)]
    for _ in range(20):
        ds = tuple(dist_pool[k] for k in rng.integers(0, len(dist_pool), 3))
        counts = tuple(int(c) for c in rng.integers(0, 51, 3))
        if sum(counts) == 0:
            continue
        total_mean = sum(c * mean(d) for d, c in zip(ds, counts))
        s = float(rng.uniform(0.05, 0.999)) * total_mean
        res = brs_tau(ds, counts, s)
        mc, se = mc_expected_served(ds, counts, s, 2000, rng)
        assert mc <= res.bound + 3 * se


def test_expected_accept_and_cost():
    assert expected_accept_and_cost(BASELINE_BETAS, (10, 10, 10), 0.0) == (0.0, 0.0)
    acc, spend = expected_accept_and_cost(BASELINE_BETAS, (3, 4, 5), 1.0)
    assert acc == pytest.approx(12.0)
    assert spend == pytest.approx(3 * 0.75 + 4 * 0.4 + 5 * 2 / 9)
    acc, spend = expected_accept_and_cost(BASELINE_BETAS, (10, 10, 10), 0.5)
    f = sum(float(cdf(d, 0.5)) for d in BASELINE_BETAS)
    p = sum(float(cost(d, 0.5)) for d in BASELINE_BETAS)
    assert acc == pytest.approx(10 * f, abs=1e-12)
    assert spend == pytest.approx(10 * p, abs=1e-12)
