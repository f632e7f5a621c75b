"""Minimax allocation of a two-stratum survey sample under a cost budget."""

from .allocation import (
    AllocationReport,
    DegenerateProportionError,
    RootBracketError,
    audit_limits,
    build_report,
    classical_sample_size,
    n1_closed_form,
    n1_star,
    neyman_allocation,
    optimize_allocation,
    reduction,
    regime_switch_w1,
    w1_star,
)
from .hypergeom import HypergeomParams, moments, pmf, sample, sample_many
from .population import (
    Allocation,
    CostBudget,
    FeasibleRange,
    InfeasibleBudgetError,
    StratifiedPopulation,
    ValidationError,
    build_population,
    canonicalize,
    validate_budget,
)
from .simulate import (
    SimulationConfig,
    SimulationSummary,
    simulate_averaged,
    simulate_classical,
    simulate_stratified,
)
from .variance import (
    CensusAllocationError,
    LatticeError,
    MaxVarianceResult,
    NuisanceSet,
    ORACLE,
    PARITY,
    VarianceCurve,
    averaged_variance_closed,
    averaged_variance_exact,
    classical_max_variance,
    classical_variance,
    emit_curve,
    max_variance,
    n2_from_budget,
    nuisance_set,
    theta_star,
    variance_known_thetas,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "AllocationReport",
    "CensusAllocationError",
    "CostBudget",
    "DegenerateProportionError",
    "FeasibleRange",
    "HypergeomParams",
    "InfeasibleBudgetError",
    "LatticeError",
    "MaxVarianceResult",
    "NuisanceSet",
    "ORACLE",
    "PARITY",
    "RootBracketError",
    "SimulationConfig",
    "SimulationSummary",
    "StratifiedPopulation",
    "ValidationError",
    "VarianceCurve",
    "audit_limits",
    "averaged_variance_closed",
    "averaged_variance_exact",
    "build_population",
    "build_report",
    "canonicalize",
    "classical_max_variance",
    "classical_sample_size",
    "classical_variance",
    "emit_curve",
    "max_variance",
    "moments",
    "n1_closed_form",
    "n1_star",
    "n2_from_budget",
    "neyman_allocation",
    "nuisance_set",
    "optimize_allocation",
    "pmf",
    "reduction",
    "regime_switch_w1",
    "sample",
    "sample_many",
    "simulate_averaged",
    "simulate_classical",
    "simulate_stratified",
    "theta_star",
    "validate_budget",
    "variance_known_thetas",
    "w1_star",
]
