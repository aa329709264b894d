"""Scenario files: strict JSON configuration for the CLI.

Top-level keys: ``populations`` (h, i, ni), ``phi``, ``immigration``,
``initial``, ``run``, and optional ``solver``. Unknown keys anywhere are
rejected so typos fail loudly instead of silently using defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .claims import Beta, ClaimDistribution, Empirical, Uniform
from .equilibrium import SolverConfig
from .simulator import (
    ConstantStream,
    DEFAULT_POPULATION_CAP,
    Immigration,
    NoImmigration,
    PopulationState,
    ProportionalToHome,
    ScenarioParams,
    SubPopulationSpec,
    truncated_poisson_pmf,
)

__all__ = ["Scenario", "ScenarioError", "load_scenario", "scenario_from_dict", "scenario_to_dict"]


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class Scenario:
    params: ScenarioParams
    solver: SolverConfig


def _check_keys(obj: dict, allowed: set[str], required: set[str], where: str):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ScenarioError(f"{where}: missing keys {sorted(missing)}")


def _claims_from(obj: dict, where: str) -> ClaimDistribution:
    _check_keys(obj, {"kind", "a", "b", "lo", "hi", "samples"}, {"kind"}, where)
    kind = obj["kind"]
    try:
        if kind == "beta":
            _check_keys(obj, {"kind", "a", "b"}, {"kind", "a", "b"}, where)
            return Beta(float(obj["a"]), float(obj["b"]))
        if kind == "uniform":
            _check_keys(obj, {"kind", "lo", "hi"}, {"kind", "lo", "hi"}, where)
            return Uniform(float(obj["lo"]), float(obj["hi"]))
        if kind == "empirical":
            _check_keys(obj, {"kind", "samples"}, {"kind", "samples"}, where)
            return Empirical(tuple(float(s) for s in obj["samples"]))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc
    raise ScenarioError(f"{where}: unknown claims kind {kind!r}")


def _population_from(obj: dict, where: str) -> SubPopulationSpec:
    _check_keys(
        obj,
        {"offspring_pmf", "offspring_mean", "offspring_law", "production_mean", "claims"},
        {"production_mean", "claims"},
        where,
    )
    if "offspring_pmf" in obj:
        if "offspring_mean" in obj or "offspring_law" in obj:
            raise ScenarioError(f"{where}: give either offspring_pmf or offspring_mean+law")
        pmf = tuple(float(p) for p in obj["offspring_pmf"])
    else:
        if "offspring_mean" not in obj:
            raise ScenarioError(f"{where}: needs offspring_pmf or offspring_mean")
        law = obj.get("offspring_law", "poisson")
        if law != "poisson":
            raise ScenarioError(f"{where}: unknown offspring law {law!r} (supported: poisson)")
        pmf = tuple(truncated_poisson_pmf(float(obj["offspring_mean"])))
    try:
        return SubPopulationSpec(
            offspring_pmf=pmf,
            production_mean=float(obj["production_mean"]),
            claims=_claims_from(obj["claims"], f"{where}.claims"),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _immigration_from(obj: dict) -> Immigration:
    _check_keys(obj, {"mode", "value"}, {"mode"}, "immigration")
    mode = obj["mode"]
    value = obj.get("value")
    try:
        if mode == "none":
            return NoImmigration()
        if mode == "proportional":
            return ProportionalToHome(float(value))
        if mode == "constant":
            return ConstantStream(float(value))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"immigration: {exc}") from exc
    raise ScenarioError(f"immigration: unknown mode {mode!r}")


def scenario_from_dict(doc: dict) -> Scenario:
    _check_keys(
        doc,
        {"populations", "phi", "immigration", "initial", "run", "solver"},
        {"populations", "phi", "immigration", "initial", "run"},
        "scenario",
    )
    pops = doc["populations"]
    _check_keys(pops, {"h", "i", "ni"}, {"h", "i", "ni"}, "populations")
    spec_h = _population_from(pops["h"], "populations.h")
    spec_i = _population_from(pops["i"], "populations.i")
    spec_ni = _population_from(pops["ni"], "populations.ni")

    init = doc["initial"]
    _check_keys(init, {"g_h", "g_i", "g_ni", "s"}, {"g_h", "g_i", "g_ni"}, "initial")
    g_h, g_i, g_ni = int(init["g_h"]), int(init["g_i"]), int(init["g_ni"])
    if "s" in init:
        s0 = float(init["s"])
    else:
        # default: the initial cohort produced the space it will consume
        s0 = (
            spec_h.production_mean * g_h
            + spec_i.production_mean * g_i
            + spec_ni.production_mean * g_ni
        )

    runspec = doc["run"]
    _check_keys(
        runspec,
        {"generations", "replications", "seed", "population_cap"},
        {"generations", "replications", "seed"},
        "run",
    )

    solver_doc = doc.get("solver", {})
    _check_keys(
        solver_doc,
        {
            "phi_grid",
            "tau_grid",
            "alpha_max",
            "tolerances",
            "strict_supercritical",
            "constraint_rhs_alpha",
        },
        set(),
        "solver",
    )
    tol = solver_doc.get("tolerances", {})
    _check_keys(tol, {"main", "constraint"}, set(), "solver.tolerances")
    solver = SolverConfig(
        phi_grid=int(solver_doc.get("phi_grid", SolverConfig.phi_grid)),
        tau_grid=int(solver_doc.get("tau_grid", SolverConfig.tau_grid)),
        alpha_max=float(solver_doc.get("alpha_max", SolverConfig.alpha_max)),
        tol_main=float(tol.get("main", SolverConfig.tol_main)),
        tol_con=float(tol.get("constraint", SolverConfig.tol_con)),
        strict_supercritical=bool(solver_doc.get("strict_supercritical", False)),
        constraint_rhs_alpha=bool(solver_doc.get("constraint_rhs_alpha", False)),
    )

    try:
        params = ScenarioParams(
            spec_h=spec_h,
            spec_i=spec_i,
            spec_ni=spec_ni,
            phi=float(doc["phi"]),
            immigration=_immigration_from(doc["immigration"]),
            initial=PopulationState(g_h, g_i, g_ni, s0),
            max_generations=int(runspec["generations"]),
            replications=int(runspec["replications"]),
            master_seed=int(runspec["seed"]),
            population_cap=int(runspec.get("population_cap", DEFAULT_POPULATION_CAP)),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return Scenario(params=params, solver=solver)


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def _claims_to_dict(d: ClaimDistribution) -> dict:
    if isinstance(d, Beta):
        return {"kind": "beta", "a": d.a, "b": d.b}
    if isinstance(d, Uniform):
        return {"kind": "uniform", "lo": d.lo, "hi": d.hi}
    return {"kind": "empirical", "samples": list(d.samples)}


def scenario_to_dict(sc: Scenario) -> dict:
    """Serialize back to the file schema (semantic round-trip)."""
    p = sc.params
    imm = p.immigration
    if isinstance(imm, ProportionalToHome):
        imm_doc = {"mode": "proportional", "value": imm.ell}
    elif isinstance(imm, ConstantStream):
        imm_doc = {"mode": "constant", "value": imm.per_generation}
    else:
        imm_doc = {"mode": "none"}
    pops = {}
    for tag, spec in zip(("h", "i", "ni"), p.specs):
        pops[tag] = {
            "offspring_pmf": list(spec.offspring_pmf),
            "production_mean": spec.production_mean,
            "claims": _claims_to_dict(spec.claims),
        }
    return {
        "populations": pops,
        "phi": p.phi,
        "immigration": imm_doc,
        "initial": {
            "g_h": p.initial.g_h,
            "g_i": p.initial.g_i,
            "g_ni": p.initial.g_ni,
            "s": p.initial.resource_space,
        },
        "run": {
            "generations": p.max_generations,
            "replications": p.replications,
            "seed": p.master_seed,
            "population_cap": p.population_cap,
        },
        "solver": {
            "phi_grid": sc.solver.phi_grid,
            "tau_grid": sc.solver.tau_grid,
            "alpha_max": sc.solver.alpha_max,
            "tolerances": {"main": sc.solver.tol_main, "constraint": sc.solver.tol_con},
            "strict_supercritical": sc.solver.strict_supercritical,
            "constraint_rhs_alpha": sc.solver.constraint_rhs_alpha,
        },
    }
