"""Equilibrium-ratio analysis for the three-class process.

A limiting state of the process is described by a claim threshold tau,
an integration rate phi in (0, 1), and a ratio alpha of immigrant to
home effectives. The balance equation equates expected consumption with
expected resource production, both normalized per home individual:

    psi_h(tau) m_h (1 + phi alpha)
      + psi_i(tau) m_i ((1 - phi) alpha + G(tau))
      + psi_ni(tau) l_ni
    = r_h (1 + phi alpha) + r_i (1 - phi) alpha + r_ni G(tau),

with the new-immigrant relay term

    G(tau) = F_ni(tau) m_ni l_ni / (F_h(tau) m_h (1 + phi alpha)).

A candidate additionally needs both effective growth factors equal and
at least critical:

    F_h(tau) m_h (1 + phi alpha) = F_i(tau) (m_i (1 - phi) + G(tau)) >= 1.

For l_ni = 0 the balance equation is linear in alpha and the ratio has
the closed form alpha = -A / (phi A + (1 - phi) B) with
A = psi_h(tau) m_h - r_h and B = psi_i(tau) m_i - r_i.

The growth-factor identity is also implemented in a variant whose right
side carries alpha, matching the alpha placement of the balance
equation's middle component; the default follows the identity as given
above, and the variant sits behind a flag for sensitivity comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .claims import ClaimDistribution, cdf, cost, is_continuous, support

__all__ = [
    "EquilibriumProblem",
    "EquilibriumCandidate",
    "SolverConfig",
    "SweepGrid",
    "EquilibriumDomainError",
    "g_ni",
    "residual_main",
    "constraint_eval",
    "solve_alpha_closed_form",
    "solve_alpha_roots",
    "find_equilibria",
    "sweep",
]


class EquilibriumDomainError(ValueError):
    """Raised when an evaluation point lies outside the defined domain."""


@dataclass(frozen=True)
class EquilibriumProblem:
    """Limiting parameters of the three sub-populations.

    Offspring means m_*, production means r_*, claim distributions, and
    the limiting number of new immigrants per home individual, ell_ni.
    Claim distributions must be continuous here; empirical step
    distributions are rejected.
    """

    claims_h: ClaimDistribution
    claims_i: ClaimDistribution
    claims_ni: ClaimDistribution
    m_h: float
    m_i: float
    m_ni: float
    r_h: float
    r_i: float
    r_ni: float
    ell_ni: float = 0.0

    def __post_init__(self):
        for name in ("m_h", "m_i", "m_ni"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("r_h", "r_i", "r_ni"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.ell_ni < 0:
            raise ValueError("ell_ni must be >= 0")
        for name in ("claims_h", "claims_i", "claims_ni"):
            if not is_continuous(getattr(self, name)):
                raise EquilibriumDomainError(
                    "equilibrium analysis requires continuous claim distributions; "
                    f"{name} is empirical"
                )

    @property
    def dists(self):
        return (self.claims_h, self.claims_i, self.claims_ni)

    def tau_range(self) -> tuple[float, float]:
        """Pooled claim support over the three classes."""
        los, his = zip(*(support(d) for d in self.dists))
        return (min(los), max(his))


@dataclass(frozen=True)
class EquilibriumCandidate:
    tau: float
    phi: float
    alpha: float
    residual_main: float
    constraint_lhs: float
    constraint_rhs: float
    feasible: bool

    def as_dict(self) -> dict:
        return {
            "tau": float(self.tau),
            "phi": float(self.phi),
            "alpha": float(self.alpha),
            "residual": float(self.residual_main),
            "constraint_lhs": float(self.constraint_lhs),
            "constraint_rhs": float(self.constraint_rhs),
            "feasible": bool(self.feasible),
        }


@dataclass(frozen=True)
class SolverConfig:
    phi_grid: int = 400
    tau_grid: int = 600
    alpha_max: float = 100.0
    tol_main: float = 1e-8
    tol_con: float = 1e-8
    strict_supercritical: bool = False
    constraint_rhs_alpha: bool = False

    def feasibility_floor(self) -> float:
        # strict mode demands clear supercriticality instead of the closed condition
        return 1.0 + self.tol_con if self.strict_supercritical else 1.0 - self.tol_con


def g_ni(p: EquilibriumProblem, tau: float, phi: float, alpha: float) -> float:
    """New-immigrant relay term G(tau); identically 0 when ell_ni = 0."""
    if p.ell_ni == 0.0:
        return 0.0
    fh = float(cdf(p.claims_h, tau))
    if fh <= 0.0:
        raise EquilibriumDomainError("G_ni singular at tau below home-claim support")
    fni = float(cdf(p.claims_ni, tau))
    return fni * p.m_ni * p.ell_ni / (fh * p.m_h * (1.0 + phi * alpha))


def residual_main(p: EquilibriumProblem, tau: float, phi: float, alpha: float) -> float:
    """Consumption minus production per home individual at (tau, phi, alpha)."""
    g = g_ni(p, tau, phi, alpha)
    psi_h = float(cost(p.claims_h, tau))
    psi_i = float(cost(p.claims_i, tau))
    psi_ni = float(cost(p.claims_ni, tau))
    lhs = (
        psi_h * p.m_h * (1.0 + phi * alpha)
        + psi_i * p.m_i * ((1.0 - phi) * alpha + g)
        + psi_ni * p.ell_ni
    )
    rhs = p.r_h * (1.0 + phi * alpha) + p.r_i * (1.0 - phi) * alpha + p.r_ni * g
    return lhs - rhs


def constraint_eval(
    p: EquilibriumProblem,
    tau: float,
    phi: float,
    alpha: float,
    *,
    rhs_carries_alpha: bool = False,
) -> tuple[float, float]:
    """Effective growth factors of the home and immigrant classes.

    Returns (lhs, rhs) of the criticality identity. With
    ``rhs_carries_alpha`` the right side is weighted by alpha like the
    balance equation's middle component; default keeps the identity as
    stated.
    """
    g = g_ni(p, tau, phi, alpha)
    fh = float(cdf(p.claims_h, tau))
    fi = float(cdf(p.claims_i, tau))
    lhs = fh * p.m_h * (1.0 + phi * alpha)
    if rhs_carries_alpha:
        rhs = fi * (p.m_i * (1.0 - phi) * alpha + g)
    else:
        rhs = fi * (p.m_i * (1.0 - phi) + g)
    return lhs, rhs


def solve_alpha_closed_form(p: EquilibriumProblem, tau: float, phi: float) -> float | None:
    """Ratio solving the balance equation when ell_ni = 0.

    Returns None when the linear coefficient degenerates or the solution
    is not positive (no admissible ratio at this (tau, phi)).
    """
    if p.ell_ni != 0.0:
        raise ValueError("closed form requires ell_ni = 0")
    if not 0.0 < phi < 1.0:
        raise ValueError("phi must lie in (0, 1)")
    a_coef = float(cost(p.claims_h, tau)) * p.m_h - p.r_h
    b_coef = float(cost(p.claims_i, tau)) * p.m_i - p.r_i
    den = phi * a_coef + (1.0 - phi) * b_coef
    if abs(den) < 1e-14:
        return None
    alpha = -a_coef / den
    return alpha if alpha > 0.0 else None


def _tau_scalars(p: EquilibriumProblem, tau: float) -> tuple[float, ...]:
    return (
        float(cost(p.claims_h, tau)),
        float(cost(p.claims_i, tau)),
        float(cost(p.claims_ni, tau)),
        float(cdf(p.claims_h, tau)),
        float(cdf(p.claims_i, tau)),
        float(cdf(p.claims_ni, tau)),
    )


def _residual_vec(p, scalars, phi, alpha):
    """Balance residual over an alpha vector with precomputed tau scalars."""
    psi_h, psi_i, psi_ni, fh, fi, fni = scalars
    alpha = np.asarray(alpha, dtype=float)
    if p.ell_ni == 0.0:
        g = np.zeros_like(alpha)
    else:
        if fh <= 0.0:
            raise EquilibriumDomainError("G_ni singular at tau below home-claim support")
        g = fni * p.m_ni * p.ell_ni / (fh * p.m_h * (1.0 + phi * alpha))
    lhs = (
        psi_h * p.m_h * (1.0 + phi * alpha)
        + psi_i * p.m_i * ((1.0 - phi) * alpha + g)
        + psi_ni * p.ell_ni
    )
    rhs = p.r_h * (1.0 + phi * alpha) + p.r_i * (1.0 - phi) * alpha + p.r_ni * g
    return lhs - rhs


def solve_alpha_roots(
    p: EquilibriumProblem,
    tau: float,
    phi: float,
    alpha_max: float = 100.0,
    *,
    n_scan: int = 160,
) -> list[float]:
    """All roots in alpha of the balance equation on (0, alpha_max].

    Closed form for ell_ni = 0; otherwise a bracket scan with Brent
    refinement (secant steps guarded by bisection).
    """
    if p.ell_ni == 0.0:
        alpha = solve_alpha_closed_form(p, tau, phi)
        return [alpha] if alpha is not None and alpha <= alpha_max else []

    scalars = _tau_scalars(p, tau)

    def f(a: float) -> float:
        return float(_residual_vec(p, scalars, phi, a))

    grid = np.unique(
        np.concatenate(
            [np.geomspace(1e-8, alpha_max, n_scan // 2), np.linspace(1e-8, alpha_max, n_scan // 2)]
        )
    )
    vals = _residual_vec(p, scalars, phi, grid)
    roots: list[float] = []
    for j in np.flatnonzero(np.isfinite(vals[:-1]) & np.isfinite(vals[1:])):
        v0, v1 = vals[j], vals[j + 1]
        if v0 == 0.0:
            roots.append(float(grid[j]))
        elif (v0 < 0) != (v1 < 0):
            roots.append(float(brentq(f, grid[j], grid[j + 1], xtol=1e-14, rtol=1e-15)))
    if vals.size and vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return sorted(set(roots))


def _constraint_diff(p, tau, phi, alpha, rhs_alpha):
    lhs, rhs = constraint_eval(p, tau, phi, alpha, rhs_carries_alpha=rhs_alpha)
    return lhs - rhs


def _candidate(p, tau, phi, alpha, config) -> EquilibriumCandidate:
    res = residual_main(p, tau, phi, alpha)
    lhs, rhs = constraint_eval(
        p, tau, phi, alpha, rhs_carries_alpha=config.constraint_rhs_alpha
    )
    feasible = (
        abs(res) <= config.tol_main
        and abs(lhs - rhs) <= config.tol_con
        and min(lhs, rhs) >= config.feasibility_floor()
    )
    return EquilibriumCandidate(tau, phi, alpha, res, lhs, rhs, feasible)


def find_equilibria(
    p: EquilibriumProblem, config: SolverConfig | None = None
) -> list[EquilibriumCandidate]:
    """Sample the solution set of the balance + criticality system.

    For each phi on a grid over (0, 1), solve the two-equation system in
    (tau, alpha): the balance equation pins alpha given tau (closed form
    when ell_ni = 0, bracketed root otherwise), and sign changes of the
    growth-factor difference along tau are refined by bisection. Only
    solutions meeting the criticality floor are returned; near-duplicate
    tau roots within one grid cell are merged. The returned list samples
    what is generically a one-parameter family; an empty list means no
    admissible equilibrium was found.
    """
    config = config or SolverConfig()
    lo, hi = p.tau_range()
    span = hi - lo
    taus = np.linspace(lo + 1e-9 * max(span, 1.0), hi, config.tau_grid)
    phis = np.arange(1, config.phi_grid + 1) / (config.phi_grid + 1)

    out: list[EquilibriumCandidate] = []
    for phi in phis:
        if p.ell_ni == 0.0:
            roots = _tau_roots_closed(p, taus, phi, config)
        else:
            roots = _tau_roots_nested(p, taus, phi, config)
        cell = span / config.tau_grid
        merged: list[tuple[float, float]] = []
        for tau_root, alpha_root in sorted(roots):
            if merged and abs(tau_root - merged[-1][0]) < cell:
                continue
            merged.append((tau_root, alpha_root))
        for tau_root, alpha_root in merged:
            cand = _candidate(p, tau_root, phi, alpha_root, config)
            if cand.feasible:
                out.append(cand)
    return out


def _tau_roots_closed(p, taus, phi, config) -> list[tuple[float, float]]:
    """Roots in tau of the growth-factor difference, closed-form alpha path."""
    psi_h = np.asarray(cost(p.claims_h, taus))
    psi_i = np.asarray(cost(p.claims_i, taus))
    f_h = np.asarray(cdf(p.claims_h, taus))
    f_i = np.asarray(cdf(p.claims_i, taus))
    a_coef = psi_h * p.m_h - p.r_h
    b_coef = psi_i * p.m_i - p.r_i
    den = phi * a_coef + (1.0 - phi) * b_coef
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(np.abs(den) >= 1e-14, -a_coef / den, np.nan)
    valid = np.isfinite(alpha) & (alpha > 0.0) & (alpha <= config.alpha_max)
    lhs = f_h * p.m_h * (1.0 + phi * alpha)
    if config.constraint_rhs_alpha:
        rhs = f_i * p.m_i * (1.0 - phi) * alpha
    else:
        rhs = f_i * p.m_i * (1.0 - phi)
    diff = np.where(valid, lhs - rhs, np.nan)

    def scalar_diff(tau: float) -> float:
        a = solve_alpha_closed_form(p, tau, phi)
        if a is None or a > config.alpha_max:
            return np.nan
        return _constraint_diff(p, tau, phi, a, config.constraint_rhs_alpha)

    roots = []
    for j in np.flatnonzero(valid[:-1] & valid[1:]):
        d0, d1 = diff[j], diff[j + 1]
        if d0 == 0.0:
            roots.append((float(taus[j]), float(alpha[j])))
        elif (d0 < 0) != (d1 < 0):
            tau_root = brentq(scalar_diff, taus[j], taus[j + 1], xtol=1e-13)
            a_root = solve_alpha_closed_form(p, tau_root, phi)
            if a_root is not None and a_root <= config.alpha_max:
                roots.append((float(tau_root), float(a_root)))
    return roots


def _tau_roots_nested(p, taus, phi, config) -> list[tuple[float, float]]:
    """Branch-continued roots when the balance equation is nonlinear in alpha."""
    rhs_alpha = config.constraint_rhs_alpha
    roots: list[tuple[float, float]] = []
    prev: list[tuple[float, float, float]] = []
    for tau in taus:
        here = []
        for alpha in solve_alpha_roots(p, tau, phi, config.alpha_max):
            try:
                d = _constraint_diff(p, tau, phi, alpha, rhs_alpha)
            except EquilibriumDomainError:
                continue
            here.append((tau, alpha, d))
        # match to the previous slice's roots by alpha proximity
        for t1, a1, d1 in here:
            best = None
            for t0, a0, d0 in prev:
                gap = abs(a1 - a0) / max(1.0, abs(a1))
                if best is None or gap < best[0]:
                    best = (gap, t0, a0, d0)
            if best is not None and best[0] < 0.5:
                _, t0, a0, d0 = best
                if np.isfinite(d0) and np.isfinite(d1) and (d0 < 0) != (d1 < 0):
                    refined = _refine_tau(p, t0, t1, a0, phi, config)
                    if refined is not None:
                        roots.append(refined)
        prev = here
    return roots


def _refine_tau(p, t0, t1, alpha_guess, phi, config):
    """Bisect the growth-factor difference in tau, continuing the alpha branch."""
    rhs_alpha = config.constraint_rhs_alpha

    def branch_alpha(tau, guess):
        roots = solve_alpha_roots(p, tau, phi, config.alpha_max)
        if not roots:
            return None
        return min(roots, key=lambda a: abs(a - guess))

    a_lo = branch_alpha(t0, alpha_guess)
    if a_lo is None:
        return None
    d_lo = _constraint_diff(p, t0, phi, a_lo, rhs_alpha)
    lo, hi_ = t0, t1
    guess = a_lo
    for _ in range(80):
        mid = 0.5 * (lo + hi_)
        a_mid = branch_alpha(mid, guess)
        if a_mid is None:
            return None
        try:
            d_mid = _constraint_diff(p, mid, phi, a_mid, rhs_alpha)
        except EquilibriumDomainError:
            return None
        guess = a_mid
        if (d_mid < 0) == (d_lo < 0):
            lo = mid
            d_lo = d_mid
        else:
            hi_ = mid
        if hi_ - lo < 1e-13 * max(1.0, abs(hi_)):
            break
    tau_root = 0.5 * (lo + hi_)
    alpha_root = branch_alpha(tau_root, guess)
    if alpha_root is None:
        return None
    return (tau_root, alpha_root)


@dataclass(frozen=True)
class SweepGrid:
    """Surfaces of the balance equation and growth factors over (tau, phi)."""

    taus: np.ndarray
    phis: np.ndarray
    fixed_alpha: float | None
    lhs15: np.ndarray  # consumption side, shape (len(taus), len(phis))
    rhs15: np.ndarray  # production side
    alpha: np.ndarray  # alpha used per cell (closed form or fixed), nan when missing
    con_lhs: np.ndarray
    con_rhs: np.ndarray
    feasible: np.ndarray  # criticality indicator: min(con_lhs, con_rhs) >= 1 - tol
    columns: tuple = field(
        default=("tau", "phi", "lhs15", "rhs15", "alpha_closed", "con_lhs", "con_rhs", "feasible"),
        repr=False,
    )


def sweep(
    p: EquilibriumProblem,
    taus,
    phis,
    alpha: float | None = None,
    config: SolverConfig | None = None,
) -> SweepGrid:
    """Evaluate the balance and growth surfaces on a (tau, phi) grid.

    With ``alpha`` fixed the same ratio is used in every cell; otherwise
    (only for ell_ni = 0) each cell uses its closed-form ratio. Cells
    without an admissible ratio are filled with nan.
    """
    config = config or SolverConfig()
    taus = np.asarray(taus, dtype=float)
    phis = np.asarray(phis, dtype=float)
    if taus.size < 2 or phis.size < 2:
        raise ValueError("sweep axes need at least 2 points each")
    lo, hi = p.tau_range()
    if taus.min() < lo - 1e-12 or taus.max() > hi + 1e-12:
        raise ValueError(f"tau axis must lie within the pooled claim support [{lo}, {hi}]")
    if phis.min() < 0.0 or phis.max() > 1.0:
        raise ValueError("phi axis must lie within [0, 1]")
    if alpha is None and p.ell_ni != 0.0:
        raise ValueError("free-alpha sweep requires ell_ni = 0; pass a fixed alpha")

    shape = (taus.size, phis.size)
    mats = {k: np.full(shape, np.nan) for k in ("lhs15", "rhs15", "alpha", "con_lhs", "con_rhs")}
    feas = np.zeros(shape, dtype=bool)
    for ii, tau in enumerate(taus):
        for jj, phi in enumerate(phis):
            if alpha is not None:
                a = alpha
            else:
                if not 0.0 < phi < 1.0:
                    continue
                a = solve_alpha_closed_form(p, tau, phi)
                if a is None or a > config.alpha_max:
                    continue
            try:
                g = g_ni(p, tau, phi, a)
                clhs, crhs = constraint_eval(
                    p, tau, phi, a, rhs_carries_alpha=config.constraint_rhs_alpha
                )
            except EquilibriumDomainError:
                continue
            psi_h = float(cost(p.claims_h, tau))
            psi_i = float(cost(p.claims_i, tau))
            psi_ni = float(cost(p.claims_ni, tau))
            mats["lhs15"][ii, jj] = (
                psi_h * p.m_h * (1.0 + phi * a)
                + psi_i * p.m_i * ((1.0 - phi) * a + g)
                + psi_ni * p.ell_ni
            )
            mats["rhs15"][ii, jj] = (
                p.r_h * (1.0 + phi * a) + p.r_i * (1.0 - phi) * a + p.r_ni * g
            )
            mats["alpha"][ii, jj] = a
            mats["con_lhs"][ii, jj] = clhs
            mats["con_rhs"][ii, jj] = crhs
            feas[ii, jj] = min(clhs, crhs) >= config.feasibility_floor()
    return SweepGrid(
        taus=taus,
        phis=phis,
        fixed_alpha=alpha,
        lhs15=mats["lhs15"],
        rhs15=mats["rhs15"],
        alpha=mats["alpha"],
        con_lhs=mats["con_lhs"],
        con_rhs=mats["con_rhs"],
        feasible=feas,
    )
