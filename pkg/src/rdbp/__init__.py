"""Resource-dependent branching processes with immigration.

Simulation of three interacting sub-populations (home, immigrants, new
immigrants) under the weakest-first resource-allocation policy, plus the
numerical machinery to evaluate and search the limiting balance and
criticality equations for admissible immigrant-to-home ratio equilibria.
"""

__version__ = "0.1.0"

from .allocation import (
    BrsResult,
    ClaimLists,
    MergedList,
    ServiceResult,
    brs_tau,
    expected_accept_and_cost,
    merge_and_sort,
    n_served,
)
from .claims import (
    Beta,
    ClaimDistribution,
    CostVector,
    Empirical,
    Uniform,
    cdf,
    contour_cost,
    cost,
    cost_vector,
    sample,
)
from .equilibrium import (
    EquilibriumCandidate,
    EquilibriumDomainError,
    EquilibriumProblem,
    SolverConfig,
    SweepGrid,
    constraint_eval,
    find_equilibria,
    g_ni,
    residual_main,
    solve_alpha_closed_form,
    sweep,
)
from .scenario import Scenario, ScenarioError, load_scenario, scenario_from_dict, scenario_to_dict
from .simulator import (
    ConstantStream,
    GenerationRecord,
    NoImmigration,
    PopulationCapError,
    PopulationState,
    ProportionalToHome,
    ScenarioParams,
    SimulationSummary,
    SubPopulationSpec,
    equilibrium_problem,
    estimate_ratio_limit,
    run,
    step_generation,
    truncated_poisson_pmf,
)

__all__ = [
    "__version__",
    # claims
    "Beta",
    "Uniform",
    "Empirical",
    "ClaimDistribution",
    "CostVector",
    "cdf",
    "cost",
    "cost_vector",
    "contour_cost",
    "sample",
    # allocation
    "ClaimLists",
    "MergedList",
    "ServiceResult",
    "BrsResult",
    "merge_and_sort",
    "n_served",
    "brs_tau",
    "expected_accept_and_cost",
    # simulator
    "SubPopulationSpec",
    "PopulationState",
    "NoImmigration",
    "ProportionalToHome",
    "ConstantStream",
    "ScenarioParams",
    "GenerationRecord",
    "SimulationSummary",
    "PopulationCapError",
    "truncated_poisson_pmf",
    "step_generation",
    "run",
    "estimate_ratio_limit",
    "equilibrium_problem",
    # equilibrium
    "EquilibriumProblem",
    "EquilibriumCandidate",
    "SolverConfig",
    "SweepGrid",
    "EquilibriumDomainError",
    "g_ni",
    "residual_main",
    "constraint_eval",
    "solve_alpha_closed_form",
    "find_equilibria",
    "sweep",
    # scenario
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
]
