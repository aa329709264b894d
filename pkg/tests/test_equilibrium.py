import numpy as np
import pytest

from rdbp import (
    Beta,
    Empirical,
    EquilibriumDomainError,
    EquilibriumProblem,
    SolverConfig,
    Uniform,
    constraint_eval,
    find_equilibria,
    g_ni,
    residual_main,
    solve_alpha_closed_form,
    sweep,
)

from conftest import baseline_problem, quad_beta_cost, swapped_problem


def with_ell(p, ell):
    from dataclasses import replace

    return replace(p, ell_ni=ell)


def test_rejects_empirical_claims():
    with pytest.raises(EquilibriumDomainError, match="continuous"):
        baseline_problem(claims_ni=Empirical((0.2, 0.5)))


def test_g_ni_zero_without_new_immigrants():
    p = baseline_problem()
    for tau, phi, alpha in ((0.3, 0.2, 1.0), (0.9, 0.8, 5.0), (0.0, 0.5, 2.0)):
        assert g_ni(p, tau, phi, alpha) == 0.0


def test_g_ni_full_support_value():
    p = with_ell(baseline_problem(), 0.4)
    # all CDFs are 1 at the top of the support and alpha drops out at phi = 0
    assert g_ni(p, 1.0, 0.0, 123.0) == pytest.approx(p.m_ni * 0.4 / p.m_h, abs=1e-14)


def test_g_ni_decreasing_in_alpha():
    p = with_ell(baseline_problem(), 0.4)
    vals = [g_ni(p, 0.7, 0.5, a) for a in (0.5, 1.0, 2.0, 4.0)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_g_ni_singular_below_home_support():
    p = with_ell(baseline_problem(), 0.4)
    with pytest.raises(EquilibriumDomainError, match="singular"):
        g_ni(p, 0.0, 0.5, 1.0)


def test_residual_alpha_zero_reduces_to_home_balance():
    p = baseline_problem()
    for tau in (0.2, 0.5, 0.9):
        expected = float(p.claims_h.cost(tau)) * p.m_h - p.r_h
        assert residual_main(p, tau, 0.4, 0.0) == pytest.approx(expected, abs=1e-14)


def test_residual_matches_independent_two_class_form(rng):
    # independent implementation of the no-new-immigrant balance, with
    # quadrature-based cost functionals
    p = baseline_problem()
    taus = rng.uniform(0.02, 0.99, 100)
    phis = rng.uniform(0.01, 0.99, 100)
    alphas = rng.uniform(0.0, 10.0, 100)
    for tau, phi, alpha in zip(taus, phis, alphas):
        psi_h = quad_beta_cost(6, 2, float(tau))
        psi_i = quad_beta_cost(2, 3, float(tau))
        lhs = psi_h * p.m_h * (1 + phi * alpha) + psi_i * p.m_i * (1 - phi) * alpha
        rhs = p.r_h * (1 + phi * alpha) + p.r_i * (1 - phi) * alpha
        assert residual_main(p, float(tau), float(phi), float(alpha)) == pytest.approx(
            lhs - rhs, abs=1e-10
        )


def test_residual_affine_in_alpha(rng):
    p = baseline_problem()
    for _ in range(50):
        tau = float(rng.uniform(0.05, 1.0))
        phi = float(rng.uniform(0.01, 0.99))
        a = float(rng.uniform(0.0, 20.0))
        h = 0.37
        second_diff = (
            residual_main(p, tau, phi, a + h)
            - 2 * residual_main(p, tau, phi, a)
            + residual_main(p, tau, phi, a - h)
        )
        assert abs(second_diff) < 1e-12


def test_constraint_trivials():
    p = baseline_problem()
    lhs, rhs = constraint_eval(p, 1.0, 0.0, 0.0)
    assert lhs == pytest.approx(p.m_h, abs=1e-12)
    assert rhs == pytest.approx(p.m_i, abs=1e-12)
    # no-new-immigrant right side carries no relay term
    lhs, rhs = constraint_eval(p, 0.6, 0.3, 2.0)
    assert rhs == pytest.approx(float(p.claims_i.cdf(0.6)) * p.m_i * 0.7, abs=1e-14)


def test_constraint_alpha_variant_differs():
    p = baseline_problem()
    _, rhs_plain = constraint_eval(p, 0.6, 0.3, 2.0)
    _, rhs_alpha = constraint_eval(p, 0.6, 0.3, 2.0, rhs_carries_alpha=True)
    assert rhs_alpha == pytest.approx(rhs_plain * 2.0, abs=1e-12)


def test_constraint_lhs_increasing_in_alpha():
    p = baseline_problem()
    vals = [constraint_eval(p, 0.7, 0.4, a)[0] for a in (0.1, 1.0, 5.0, 20.0)]
    assert all(x < y for x, y in zip(vals, vals[1:]))


def test_closed_form_degenerate_cases():
    p = baseline_problem()
    # home exactly self-balancing: numerator zero, alpha not positive
    tau_a0 = 0.93705  # near the root of cost_h * m_h - r_h
    from scipy.optimize import brentq

    tau_a0 = brentq(lambda t: float(p.claims_h.cost(t)) * p.m_h - p.r_h, 0.5, 1.0)
    assert solve_alpha_closed_form(p, tau_a0, 0.4) is None
    with pytest.raises(ValueError):
        solve_alpha_closed_form(p, 0.5, 0.0)
    with pytest.raises(ValueError):
        solve_alpha_closed_form(with_ell(p, 0.2), 0.5, 0.5)


def test_closed_form_back_substitution(rng):
    p = baseline_problem()
    checked = 0
    for _ in range(2000):
        tau = float(rng.uniform(0.02, 1.0))
        phi = float(rng.uniform(0.01, 0.99))
        alpha = solve_alpha_closed_form(p, tau, phi)
        if alpha is None:
            continue
        checked += 1
        assert abs(residual_main(p, tau, phi, alpha)) <= 1e-10
    assert checked > 100


def test_find_equilibria_baseline_candidates_are_closed_loop():
    p = baseline_problem()
    cfg = SolverConfig(phi_grid=60, tau_grid=300)
    cands = find_equilibria(p, cfg)
    assert cands, "reference scenario admits candidates at small phi"
    for c in cands:
        assert abs(residual_main(p, c.tau, c.phi, c.alpha)) <= cfg.tol_main
        lhs, rhs = constraint_eval(p, c.tau, c.phi, c.alpha)
        assert abs(lhs - rhs) <= cfg.tol_con
        assert min(lhs, rhs) >= 1 - cfg.tol_con
        assert 0 < c.phi < 1
        assert c.alpha > 0


def test_find_equilibria_swapped_is_empty():
    # with claims and productions exchanged the home growth factor dominates
    # the immigrant one for every admissible ratio, so no equality exists
    cands = find_equilibria(swapped_problem(), SolverConfig(phi_grid=60, tau_grid=300))
    assert cands == []


def test_find_equilibria_production_perturbation_moves_roots():
    p = baseline_problem()
    cfg = SolverConfig(phi_grid=40, tau_grid=300)
    base = find_equilibria(p, cfg)
    assert base
    for factor in (0.9, 1.1):
        moved = find_equilibria(baseline_problem(r_h=p.r_h * factor), cfg)
        base_taus = {round(c.phi, 6): c.tau for c in base}
        moved_taus = {round(c.phi, 6): c.tau for c in moved}
        common = set(base_taus) & set(moved_taus)
        assert common
        assert all(abs(base_taus[k] - moved_taus[k]) > 1e-6 for k in common)


def test_find_equilibria_with_new_immigrant_relay():
    # nonzero ell exercises the nested alpha solve; candidates must close the loop
    p = with_ell(baseline_problem(), 0.05)
    cfg = SolverConfig(phi_grid=25, tau_grid=200)
    cands = find_equilibria(p, cfg)
    for c in cands:
        assert abs(residual_main(p, c.tau, c.phi, c.alpha)) <= 1e-6
        lhs, rhs = constraint_eval(p, c.tau, c.phi, c.alpha)
        assert abs(lhs - rhs) <= 1e-6


def test_sweep_small_grid_all_cells():
    p = baseline_problem()
    grid = sweep(p, [0.3, 0.7], [0.2, 0.8], alpha=5.0)
    assert grid.lhs15.shape == (2, 2)
    assert np.all(np.isfinite(grid.lhs15))
    assert np.all(np.isfinite(grid.con_lhs))


def test_sweep_rhs_affine_for_fixed_alpha():
    p = baseline_problem()
    taus = np.linspace(0.02, 1.0, 50)
    phis = np.linspace(0.01, 0.99, 50)
    grid = sweep(p, taus, phis, alpha=5.0)
    d2_tau = np.diff(grid.rhs15, n=2, axis=0)
    d2_phi = np.diff(grid.rhs15, n=2, axis=1)
    assert np.nanmax(np.abs(d2_tau)) <= 1e-12
    assert np.nanmax(np.abs(d2_phi)) <= 1e-12


def test_sweep_closed_form_alpha_column():
    p = baseline_problem()
    grid = sweep(p, np.linspace(0.55, 0.95, 9), np.linspace(0.05, 0.3, 7))
    finite = np.isfinite(grid.alpha)
    assert finite.any()
    ii, jj = np.argwhere(finite)[0]
    expected = solve_alpha_closed_form(p, float(grid.taus[ii]), float(grid.phis[jj]))
    assert grid.alpha[ii, jj] == pytest.approx(expected, abs=1e-12)


def test_sweep_validation():
    p = baseline_problem()
    with pytest.raises(ValueError, match="support"):
        sweep(p, [0.5, 1.5], [0.2, 0.4], alpha=1.0)
    with pytest.raises(ValueError, match="phi"):
        sweep(p, [0.2, 0.5], [0.5, 1.5], alpha=1.0)
    with pytest.raises(ValueError):
        sweep(p, [0.5], [0.2, 0.4], alpha=1.0)
    with pytest.raises(ValueError, match="fixed alpha"):
        sweep(with_ell(p, 0.3), [0.2, 0.5], [0.2, 0.4])


def test_problem_validation():
    with pytest.raises(ValueError):
        baseline_problem(m_h=0.0)
    with pytest.raises(ValueError):
        baseline_problem(r_i=-0.1)
    with pytest.raises(ValueError):
        with_ell(baseline_problem(), -0.5)


def test_tau_range_pooled_support():
    p = EquilibriumProblem(
        claims_h=Uniform(0.2, 0.9),
        claims_i=Beta(2, 3),
        claims_ni=Uniform(0.5, 2.0),
        m_h=2.0,
        m_i=2.0,
        m_ni=2.0,
        r_h=0.5,
        r_i=0.5,
        r_ni=0.5,
    )
    assert p.tau_range() == (0.0, 2.0)
