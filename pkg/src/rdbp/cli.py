"""Command-line interface.

Subcommands: ``cost`` (CDF/cost tables and contour grids), ``simulate``
(trajectory CSV plus a JSON summary), ``solve`` (equilibrium candidates
as JSON), and ``sweep`` (balance/growth surfaces as long-format CSV).
Numeric cells are written with 17 significant digits so every value
round-trips to the exact float. Exit codes: 0 success, 1 usage or
configuration error, 2 no equilibrium under --require-equilibrium,
3 runtime numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .claims import cdf, cost, contour_cost
from .equilibrium import EquilibriumDomainError, find_equilibria, sweep
from .scenario import Scenario, ScenarioError, load_scenario
from .simulator import PopulationCapError, equilibrium_problem, estimate_ratio_limit, run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_EQUILIBRIUM = 2
EXIT_NUMERIC = 3

_CONTOUR_Y_CLASS = {"hi": "ni", "hni": "i", "ini": "h"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's default 2
        raise _UsageError(message)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and not np.isfinite(x):
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _write_csv(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_json(path: str | None, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _threshold_grid(args, sc: Scenario) -> np.ndarray:
    if args.thresholds is not None:
        if args.thresholds.strip() == "":
            return np.empty(0)
        return np.array([float(v) for v in args.thresholds.split(",")])
    dists = [s.claims for s in sc.params.specs]
    hi = max(d.support[1] for d in dists)
    lo = min(d.support[0] for d in dists)
    return np.linspace(lo, hi, args.grid)


def cmd_cost(args) -> int:
    sc = load_scenario(args.scenario)
    dists = tuple(s.claims for s in sc.params.specs)
    if args.contour:
        which = _CONTOUR_Y_CLASS[args.contour]
        ts = _threshold_grid(args, sc)
        rows = []
        for xv in ts:
            for yv in ts:
                rows.append((xv, yv, float(contour_cost(dists, which, xv, yv))))
        _write_csv(args.out, ["x", "y", "Phi"], rows)
        return EXIT_OK
    ts = _threshold_grid(args, sc)
    rows = []
    for t in ts:
        rows.append(
            (
                t,
                float(cdf(dists[0], t)),
                float(cdf(dists[1], t)),
                float(cdf(dists[2], t)),
                float(cost(dists[0], t)),
                float(cost(dists[1], t)),
                float(cost(dists[2], t)),
            )
        )
    _write_csv(args.out, ["t", "F_h", "F_i", "F_ni", "Psi_h", "Psi_i", "Psi_ni"], rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    summary = run(sc.params)
    rows = []
    traj = summary.trajectories
    for rep in range(traj.shape[0]):
        for t in range(traj.shape[1]):
            g_h, g_i, g_ni, imm, sh, si, sni, s, thr = traj[rep, t]
            ratio = g_i / g_h if g_h > 0 else float("nan")
            rows.append(
                (
                    rep,
                    t + 1,
                    int(g_h),
                    int(g_i),
                    int(g_ni),
                    int(imm),
                    int(sh),
                    int(si),
                    int(sni),
                    s,
                    ratio,
                )
            )
    _write_csv(
        args.out,
        [
            "replication",
            "t",
            "g_h",
            "g_i",
            "g_ni",
            "I_t",
            "served_h",
            "served_i",
            "served_ni",
            "s",
            "ratio",
        ],
        rows,
    )
    payload = {
        "survival_frequency": summary.survival_frequency,
        "n_survivors": summary.n_survivors,
        "seed": summary.master_seed,
        "backend": summary.backend,
        "alpha_hat": None,
        "stderr": None,
    }
    if summary.n_survivors > 0:
        alpha_hat, stderr = estimate_ratio_limit(summary)
        payload["alpha_hat"] = alpha_hat
        payload["stderr"] = stderr
    _write_json(args.summary, payload)
    return EXIT_OK


def cmd_solve(args) -> int:
    sc = load_scenario(args.scenario)
    solver = sc.solver
    if args.strict_supercritical:
        from dataclasses import replace

        solver = replace(solver, strict_supercritical=True)
    try:
        problem = equilibrium_problem(sc.params)
    except EquilibriumDomainError as exc:
        raise ScenarioError(f"equilibrium analysis requires continuous claim distributions: {exc}")
    candidates = find_equilibria(problem, solver)
    _write_json(args.out, [c.as_dict() for c in candidates])
    if args.require_equilibrium and not candidates:
        print("no equilibrium candidates found", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    return EXIT_OK


def _axis(spec: str, name: str) -> np.ndarray:
    parts = spec.split(",")
    if len(parts) != 3:
        raise _UsageError(f"--{name} expects lo,hi,steps")
    lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    if steps < 2 or not hi > lo:
        raise _UsageError(f"--{name} needs lo < hi and steps >= 2")
    return np.linspace(lo, hi, steps)


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    axes = tuple(a.strip() for a in args.axes.split(","))
    if set(axes) != {"tau", "phi"}:
        raise _UsageError("--axes must name tau and phi")
    try:
        problem = equilibrium_problem(sc.params)
    except EquilibriumDomainError as exc:
        raise ScenarioError(f"equilibrium analysis requires continuous claim distributions: {exc}")
    lo, hi = problem.tau_range()
    taus = _axis(args.tau, "tau") if args.tau else np.linspace(lo + 1e-9, hi, 50)
    phis = _axis(args.phi, "phi") if args.phi else np.linspace(0.01, 0.99, 50)
    try:
        grid = sweep(problem, taus, phis, alpha=args.alpha, config=sc.solver)
    except ValueError as exc:
        raise ScenarioError(str(exc))
    rows = []
    for ii, tau in enumerate(grid.taus):
        for jj, phi in enumerate(grid.phis):
            rows.append(
                (
                    tau,
                    phi,
                    grid.lhs15[ii, jj],
                    grid.rhs15[ii, jj],
                    grid.alpha[ii, jj],
                    grid.con_lhs[ii, jj],
                    grid.con_rhs[ii, jj],
                    bool(grid.feasible[ii, jj]),
                )
            )
    _write_csv(
        args.out,
        ["tau", "phi", "lhs15", "rhs15", "alpha_closed", "con_lhs", "con_rhs", "feasible"],
        rows,
    )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="rdbp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rdbp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cost = sub.add_parser("cost", help="emit CDF and cost tables or contour grids")
    p_cost.add_argument("--scenario", required=True)
    p_cost.add_argument("--out", required=True)
    p_cost.add_argument("--thresholds", help="comma-separated threshold list")
    p_cost.add_argument("--grid", type=int, default=101, help="grid size over the pooled support")
    p_cost.add_argument("--contour", choices=sorted(_CONTOUR_Y_CLASS))
    p_cost.set_defaults(func=cmd_cost)

    p_sim = sub.add_parser("simulate", help="run replications, write trajectories and a summary")
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--out", required=True, help="trajectory CSV path")
    p_sim.add_argument("--summary", default="-", help="JSON summary path (default stdout)")
    p_sim.set_defaults(func=cmd_simulate)

    p_solve = sub.add_parser("solve", help="search for equilibrium candidates")
    p_solve.add_argument("--scenario", required=True)
    p_solve.add_argument("--out", default="-", help="candidate JSON path (default stdout)")
    p_solve.add_argument("--require-equilibrium", action="store_true")
    p_solve.add_argument("--strict-supercritical", action="store_true")
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="evaluate balance and growth surfaces on a grid")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--axes", default="tau,phi")
    p_sweep.add_argument("--tau", help="tau axis as lo,hi,steps")
    p_sweep.add_argument("--phi", help="phi axis as lo,hi,steps")
    p_sweep.add_argument("--alpha", type=float, help="fixed ratio for every cell")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PopulationCapError, EquilibriumDomainError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
