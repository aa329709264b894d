"""Generation-stepping simulation of the three-class population.

One generation runs through a fixed event order:

  1. integration: a Binomial(g_i, phi) number of immigrants joins the
     home class and behaves as home from then on;
  2. arrival: new immigrants enter the transitory class;
  3. claims: every individual draws a claim from its class distribution;
  4. service: the weakest-first policy serves the smallest claims from
     the merged list until the carried resource space is exhausted;
  5. reproduction: served individuals reproduce by their class offspring
     law, unserved individuals leave; offspring of home (including the
     integrated) stay home, offspring of immigrants stay immigrants, and
     offspring of new immigrants join the immigrant class;
  6. production: the offspring produce the next resource space at their
     class production means; the generation's new immigrants add their
     own production (they are present for exactly one generation).

Replications are independent, each with its own seeded stream derived
from the master seed, so results are reproducible and order-independent.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import allocation, claims as claims_mod
from ._backend import derive_seeds, resolve_backend, thread_count
from .claims import ClaimDistribution
from .equilibrium import EquilibriumProblem

__all__ = [
    "SubPopulationSpec",
    "PopulationState",
    "NoImmigration",
    "ProportionalToHome",
    "ConstantStream",
    "Immigration",
    "ScenarioParams",
    "GenerationRecord",
    "SimulationSummary",
    "PopulationCapError",
    "truncated_poisson_pmf",
    "step_generation",
    "run",
    "estimate_ratio_limit",
    "equilibrium_problem",
    "TRAJECTORY_COLUMNS",
]

DEFAULT_POPULATION_CAP = 1_000_000_000

TRAJECTORY_COLUMNS = (
    "g_h",
    "g_i",
    "g_ni",
    "immigrants",
    "served_h",
    "served_i",
    "served_ni",
    "resource_space",
    "threshold",
)


class PopulationCapError(RuntimeError):
    """A replication exceeded the configured population cap."""


def truncated_poisson_pmf(mean: float, k_max: int = 64) -> np.ndarray:
    """Poisson(mean) offspring law truncated at k_max and renormalized."""
    if mean <= 0:
        raise ValueError("offspring mean must be positive")
    ks = np.arange(k_max + 1)
    logp = ks * math.log(mean) - mean - np.array([math.lgamma(k + 1) for k in ks])
    p = np.exp(logp)
    return p / p.sum()


@dataclass(frozen=True)
class SubPopulationSpec:
    """Offspring law, production mean, and claim distribution of one class."""

    offspring_pmf: tuple[float, ...]
    production_mean: float
    claims: ClaimDistribution

    def __post_init__(self):
        pmf = np.asarray(self.offspring_pmf, dtype=float)
        object.__setattr__(self, "offspring_pmf", tuple(pmf))
        if pmf.size < 2:
            raise ValueError("offspring pmf needs at least p_0 and p_1")
        if np.any(pmf < 0):
            raise ValueError("offspring pmf entries must be >= 0")
        if abs(pmf.sum() - 1.0) > 1e-12:
            raise ValueError("offspring pmf must sum to 1 within 1e-12")
        if not (0.0 < pmf[0] <= pmf[0] + pmf[1] < 1.0):
            raise ValueError("offspring pmf needs 0 < p_0 <= p_0 + p_1 < 1")
        if self.production_mean < 0:
            raise ValueError("production mean must be >= 0")

    @property
    def mean(self) -> float:
        pmf = np.asarray(self.offspring_pmf)
        return float(np.dot(np.arange(pmf.size), pmf))


@dataclass(frozen=True)
class PopulationState:
    """Class effectives carried between generations plus the resource space.

    ``g_ni`` holds transitory-class members who will submit claims in
    the coming generation (normally 0 except in a configured initial
    state); arrivals generated during a step are accounted inside it.
    """

    g_h: int
    g_i: int
    g_ni: int
    resource_space: float

    def __post_init__(self):
        for name in ("g_h", "g_i", "g_ni"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.resource_space < 0:
            raise ValueError("resource space must be >= 0")


@dataclass(frozen=True)
class NoImmigration:
    mode = "none"


@dataclass(frozen=True)
class ProportionalToHome:
    """Arrivals track the home class: I_t = round(ell * g_h)."""

    ell: float
    mode = "proportional"

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("ell must be >= 0")


@dataclass(frozen=True)
class ConstantStream:
    """A fixed number of arrivals per generation."""

    per_generation: float
    mode = "constant"

    def __post_init__(self):
        if self.per_generation < 0:
            raise ValueError("arrival rate must be >= 0")


Immigration = Union[NoImmigration, ProportionalToHome, ConstantStream]


@dataclass(frozen=True)
class ScenarioParams:
    spec_h: SubPopulationSpec
    spec_i: SubPopulationSpec
    spec_ni: SubPopulationSpec
    phi: float
    immigration: Immigration
    initial: PopulationState
    max_generations: int
    replications: int
    master_seed: int
    population_cap: int = DEFAULT_POPULATION_CAP

    def __post_init__(self):
        if not 0.0 <= self.phi <= 1.0:
            raise ValueError("phi must lie in [0, 1]")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.population_cap < 1:
            raise ValueError("population cap must be >= 1")

    @property
    def specs(self) -> tuple[SubPopulationSpec, SubPopulationSpec, SubPopulationSpec]:
        return (self.spec_h, self.spec_i, self.spec_ni)


@dataclass(frozen=True)
class GenerationRecord:
    """Snapshot of one executed generation.

    Counts are the claimant effectives (after integration and arrival);
    served counts never exceed them. ``threshold`` is the largest served
    claim, nan when nothing was served; ``ratio`` is g_i / g_h, nan when
    the home class is empty.
    """

    generation: int
    g_h: int
    g_i: int
    g_ni: int
    immigrants: int
    served_h: int
    served_i: int
    served_ni: int
    resource_space: float
    threshold: float
    ratio: float


def _arrivals(immigration: Immigration, g_h_current: int) -> int:
    if isinstance(immigration, ProportionalToHome):
        return int(np.rint(immigration.ell * g_h_current))
    if isinstance(immigration, ConstantStream):
        return int(np.rint(immigration.per_generation))
    return 0


def _offspring_sum(rng: np.random.Generator, n: int, pmf: np.ndarray) -> int:
    if n <= 0:
        return 0
    counts = rng.multinomial(n, pmf)
    return int(np.dot(np.arange(pmf.size), counts))


def step_generation(
    state: PopulationState,
    params: ScenarioParams,
    rng: np.random.Generator,
    generation: int = 0,
) -> tuple[PopulationState, GenerationRecord]:
    """Advance the population by one generation (pure-numpy path)."""
    integ = int(rng.binomial(state.g_i, params.phi)) if state.g_i > 0 else 0
    x = state.g_h + integ
    y = state.g_i - integ
    arrived = _arrivals(params.immigration, x)
    z = state.g_ni + arrived
    total = x + y + z
    if total > params.population_cap:
        raise PopulationCapError(
            f"population explosion cap: {total} claimants exceed cap {params.population_cap}"
        )

    s = state.resource_space
    if total == 0:
        record = GenerationRecord(
            generation, 0, 0, 0, arrived, 0, 0, 0, s, float("nan"), float("nan")
        )
        return PopulationState(0, 0, 0, 0.0), record

    lists = allocation.ClaimLists(
        h=claims_mod.sample(params.spec_h.claims, rng, x),
        i=claims_mod.sample(params.spec_i.claims, rng, y),
        ni=claims_mod.sample(params.spec_ni.claims, rng, z),
    )
    svc = allocation.n_served(allocation.merge_and_sort(lists), s)
    sh, si, sni = (int(c) for c in svc.served_by_class)

    pmf_h = np.asarray(params.spec_h.offspring_pmf)
    pmf_i = np.asarray(params.spec_i.offspring_pmf)
    pmf_ni = np.asarray(params.spec_ni.offspring_pmf)
    next_h = _offspring_sum(rng, sh, pmf_h)
    next_i = _offspring_sum(rng, si, pmf_i) + _offspring_sum(rng, sni, pmf_ni)

    next_s = (
        params.spec_h.production_mean * next_h
        + params.spec_i.production_mean * next_i
        + params.spec_ni.production_mean * z
    )
    record = GenerationRecord(
        generation,
        x,
        y,
        z,
        arrived,
        sh,
        si,
        sni,
        s,
        svc.threshold,
        (y / x) if x > 0 else float("nan"),
    )
    return PopulationState(next_h, next_i, 0, next_s), record


@dataclass(frozen=True)
class SimulationSummary:
    """Replication bundle with trajectories and survivor statistics.

    ``trajectories`` has shape (replications, generations, columns) with
    the column order of ``TRAJECTORY_COLUMNS``. Survival means both the
    home and immigrant classes are alive at the final generation.
    """

    params: ScenarioParams = field(repr=False)
    trajectories: np.ndarray = field(repr=False)
    survivor_mask: np.ndarray = field(repr=False)
    survival_frequency: float
    n_survivors: int
    mean_counts_survivors: np.ndarray = field(repr=False)  # (generations, 3), nan w/o survivors
    ratio_path_mean: np.ndarray = field(repr=False)  # (generations,), survivor mean of g_i/g_h
    terminal_ratio_mean: float
    terminal_ratio_var: float
    backend: str
    master_seed: int

    @property
    def columns(self) -> tuple:
        return TRAJECTORY_COLUMNS


def _claim_codes(dist: ClaimDistribution) -> tuple[int, float, float, np.ndarray]:
    if isinstance(dist, claims_mod.Beta):
        return 0, dist.a, dist.b, np.empty(0)
    if isinstance(dist, claims_mod.Uniform):
        return 1, dist.lo, dist.hi, np.empty(0)
    return 2, 0.0, 0.0, np.asarray(dist._sorted, dtype=float)


def _pack_kernel_args(params: ScenarioParams):
    kinds = np.zeros(3, dtype=np.int64)
    pa = np.zeros(3)
    pb = np.zeros(3)
    emp_chunks = []
    emp_off = np.zeros(4, dtype=np.int64)
    for c, spec in enumerate(params.specs):
        kind, a, b, emp = _claim_codes(spec.claims)
        kinds[c], pa[c], pb[c] = kind, a, b
        emp_off[c + 1] = emp_off[c] + emp.size
        emp_chunks.append(emp)
    emp_vals = np.concatenate(emp_chunks) if any(e.size for e in emp_chunks) else np.zeros(1)

    k_max = max(len(spec.offspring_pmf) for spec in params.specs)
    pmf = np.ones((3, k_max))  # rows hold the cumulative offspring law
    pmf_len = np.zeros(3, dtype=np.int64)
    for c, spec in enumerate(params.specs):
        arr = np.cumsum(spec.offspring_pmf)
        pmf[c, : arr.size] = arr
        pmf_len[c] = arr.size

    r = np.array([s.production_mean for s in params.specs])
    imm = params.immigration
    if isinstance(imm, ProportionalToHome):
        imm_mode, imm_val = 1, imm.ell
    elif isinstance(imm, ConstantStream):
        imm_mode, imm_val = 2, imm.per_generation
    else:
        imm_mode, imm_val = 0, 0.0
    g0 = np.array([params.initial.g_h, params.initial.g_i, params.initial.g_ni], dtype=np.int64)
    return kinds, pa, pb, emp_vals, emp_off, pmf, pmf_len, r, imm_mode, imm_val, g0


def _run_numba(params: ScenarioParams, seeds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    from ._kernels import simulate_block

    (kinds, pa, pb, emp_vals, emp_off, pmf, pmf_len, r, imm_mode, imm_val, g0) = (
        _pack_kernel_args(params)
    )
    reps, gens = params.replications, params.max_generations
    out = np.zeros((reps, gens, len(TRAJECTORY_COLUMNS)))
    status = np.zeros(reps, dtype=np.int64)
    args = (
        kinds,
        pa,
        pb,
        emp_vals,
        emp_off,
        pmf,
        pmf_len,
        r,
        float(params.phi),
        imm_mode,
        float(imm_val),
        g0,
        float(params.initial.resource_space),
        gens,
        int(params.population_cap),
        seeds,
        out,
        status,
    )
    workers = min(thread_count(), reps)
    if workers <= 1:
        simulate_block(*args, 0, reps)
    else:
        bounds = np.linspace(0, reps, workers + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(simulate_block, *args, int(bounds[w]), int(bounds[w + 1]))
                for w in range(workers)
            ]
            for f in futures:
                f.result()
    return out, status


def _run_python(params: ScenarioParams, seeds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    reps, gens = params.replications, params.max_generations
    out = np.zeros((reps, gens, len(TRAJECTORY_COLUMNS)))
    status = np.zeros(reps, dtype=np.int64)
    for rep in range(reps):
        rng = np.random.default_rng(int(seeds[rep]))
        state = params.initial
        for t in range(gens):
            try:
                state, rec = step_generation(state, params, rng, generation=t)
            except PopulationCapError:
                status[rep] = 1
                break
            out[rep, t] = (
                rec.g_h,
                rec.g_i,
                rec.g_ni,
                rec.immigrants,
                rec.served_h,
                rec.served_i,
                rec.served_ni,
                rec.resource_space,
                rec.threshold,
            )
    return out, status


def run(params: ScenarioParams, backend: str | None = None) -> SimulationSummary:
    """Run independent replications and summarize survivor statistics.

    Deterministic for a fixed (params, master_seed) pair within a
    backend; the two backends use different random-stream algorithms and
    agree statistically, not trajectory-by-trajectory.
    """
    chosen = resolve_backend(backend)
    seeds = derive_seeds(params.master_seed, params.replications)
    if chosen == "numba":
        traj, status = _run_numba(params, seeds)
    else:
        traj, status = _run_python(params, seeds)
    if np.any(status != 0):
        bad = int(np.argmax(status != 0))
        raise PopulationCapError(
            f"population explosion cap: replication {bad} exceeded {params.population_cap}"
        )

    final = traj[:, -1, :]
    survivors = (final[:, 0] > 0) & (final[:, 1] > 0)
    n_surv = int(survivors.sum())
    gens = params.max_generations

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(traj[:, :, 0] > 0, traj[:, :, 1] / traj[:, :, 0], np.nan)
    if n_surv:
        mean_counts = traj[survivors][:, :, :3].mean(axis=0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-nan generations
            ratio_path = np.nanmean(ratios[survivors], axis=0)
        terminal = ratios[survivors, -1]
        term_mean = float(np.nanmean(terminal))
        term_var = float(np.nanvar(terminal, ddof=1)) if n_surv > 1 else 0.0
    else:
        mean_counts = np.full((gens, 3), np.nan)
        ratio_path = np.full(gens, np.nan)
        term_mean = float("nan")
        term_var = float("nan")

    return SimulationSummary(
        params=params,
        trajectories=traj,
        survivor_mask=survivors,
        survival_frequency=n_surv / params.replications,
        n_survivors=n_surv,
        mean_counts_survivors=mean_counts,
        ratio_path_mean=ratio_path,
        terminal_ratio_mean=term_mean,
        terminal_ratio_var=term_var,
        backend=chosen,
        master_seed=params.master_seed,
    )


def estimate_ratio_limit(summary: SimulationSummary) -> tuple[float, float]:
    """Mean and standard error of the terminal-window immigrant/home ratio.

    The window is the last 20% of generations; averaging is per
    surviving replication first, then across replications.
    """
    if summary.n_survivors == 0:
        raise ValueError("conditioning event empty: no surviving replications")
    traj = summary.trajectories[summary.survivor_mask]
    gens = traj.shape[1]
    w = max(1, int(math.ceil(0.2 * gens)))
    win = traj[:, gens - w :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(win[:, :, 0] > 0, win[:, :, 1] / win[:, :, 0], np.nan)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        per_rep = np.nanmean(ratios, axis=1)
    per_rep = per_rep[np.isfinite(per_rep)]
    if per_rep.size == 0:
        raise ValueError("conditioning event empty: no finite ratios in the window")
    alpha_hat = float(per_rep.mean())
    stderr = float(per_rep.std(ddof=1) / math.sqrt(per_rep.size)) if per_rep.size > 1 else 0.0
    return alpha_hat, stderr


def equilibrium_problem(params: ScenarioParams) -> EquilibriumProblem:
    """Limiting-parameter view of a scenario for the equilibrium solver.

    The new-immigrant limit is the proportional-arrival rate when that
    mode is active and 0 otherwise (a constant stream is asymptotically
    negligible against a growing home class).
    """
    ell = params.immigration.ell if isinstance(params.immigration, ProportionalToHome) else 0.0
    return EquilibriumProblem(
        claims_h=params.spec_h.claims,
        claims_i=params.spec_i.claims,
        claims_ni=params.spec_ni.claims,
        m_h=params.spec_h.mean,
        m_i=params.spec_i.mean,
        m_ni=params.spec_ni.mean,
        r_h=params.spec_h.production_mean,
        r_i=params.spec_i.production_mean,
        r_ni=params.spec_ni.production_mean,
        ell_ni=ell,
    )
