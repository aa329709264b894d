"""Benchmark the compiled kernel against the pure-numpy fallback.

Two regimes are timed: many replications of small populations, where
per-generation call overhead dominates and the compiled loop wins, and
fewer replications of large populations, where the fallback's bulk
vectorized sampling and sorting catch up. The first numba call is
excluded from timing (JIT warm-up). Select a backend at runtime with
RDBP_BACKEND=numba|python.

    python benchmarks/bench_backends.py
"""

import argparse
import time

from rdbp import (
    NoImmigration,
    PopulationState,
    ScenarioParams,
    SubPopulationSpec,
    Uniform,
    run,
)
from rdbp.simulator import truncated_poisson_pmf


def build_params(
    g0: int, replications: int, generations: int, mean_h=1.45, mean_i=1.55
) -> ScenarioParams:
    claims = Uniform(0.0, 1.0)

    def spec(mean, production):
        return SubPopulationSpec(tuple(truncated_poisson_pmf(mean)), production, claims)

    return ScenarioParams(
        spec_h=spec(mean_h, 0.27),
        spec_i=spec(mean_i, 0.27),
        spec_ni=spec(1.10, 0.27),
        phi=0.1,
        immigration=NoImmigration(),
        initial=PopulationState(g0, g0, 0, 2 * g0 * 0.27),
        max_generations=generations,
        replications=replications,
        master_seed=1234,
    )


def time_backend(params: ScenarioParams, backend: str) -> tuple[float, float]:
    t0 = time.perf_counter()
    summary = run(params, backend=backend)
    elapsed = time.perf_counter() - t0
    individuals = float(summary.trajectories[:, :, :3].sum())
    return elapsed, individuals


def report(label: str, params: ScenarioParams) -> None:
    t_numba, n = time_backend(params, "numba")
    t_python, _ = time_backend(params, "python")
    print(f"{label}:")
    print(f"  numba  {t_numba:8.3f} s  ({n / t_numba / 1e6:6.1f} M individual-generations/s)")
    print(f"  python {t_python:8.3f} s  ({n / t_python / 1e6:6.1f} M individual-generations/s)")
    print(f"  numba speedup over python: {t_python / t_numba:.2f}x")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale", type=float, default=1.0, help="workload multiplier")
    args = ap.parse_args()

    run(build_params(10, 4, 5), backend="numba")  # trigger JIT compilation

    # near-critical means keep the ensembles small throughout
    small = build_params(30, int(4000 * args.scale), 150, mean_h=1.36, mean_i=1.40)
    large = build_params(20000, int(30 * args.scale), 25)
    report(
        f"small populations ({small.replications} reps x {small.max_generations} gens, g0=30+30)",
        small,
    )
    report(
        f"large populations ({large.replications} reps x {large.max_generations} gens, g0=20k+20k)",
        large,
    )


if __name__ == "__main__":
    main()
