"""Monte Carlo checks of unbiasedness, variance identities, and expected cost.

Uniform variates come from a counter-based Philox stream keyed by the
configured seed, with replication ``i`` consuming the fixed block of
uniforms at row ``i``. Results therefore depend only on ``(seed, inputs)``,
never on execution strategy, and replications could be generated in
parallel without changing the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import classical_sample_size
from .hypergeom import HypergeomParams, quantile
from .population import Allocation, CostBudget, StratifiedPopulation, ValidationError
from .variance import LatticeError, _lattice_numerator

KNOWN_THETAS = "known-thetas"
AVERAGED_NUISANCE = "averaged-nuisance"
CLASSICAL_SRS = "classical-srs"
SIMULATION_MODES = (KNOWN_THETAS, AVERAGED_NUISANCE, CLASSICAL_SRS)


@dataclass(frozen=True)
class SimulationConfig:
    replications: int
    seed: int
    mode: str = KNOWN_THETAS

    def __post_init__(self) -> None:
        if isinstance(self.replications, bool) or not isinstance(self.replications, int):
            raise ValidationError("replications must be an integer")
        if self.replications < 1:
            raise ValidationError(f"replications must be >= 1, got {self.replications}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValidationError("seed must be an integer")
        if self.mode not in SIMULATION_MODES:
            raise ValidationError(f"mode must be one of {SIMULATION_MODES}")


@dataclass(frozen=True)
class SimulationSummary:
    estimator_mean: float
    estimator_variance: float
    standard_error_mean: float
    replications: int
    expected_cost_empirical: float | None = None
    cost_standard_error: float | None = None
    within_variance: float | None = None


def _uniform_rows(seed: int, replications: int, columns: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(seed))
    return gen.random((replications, columns))


def _integral_successes(name: str, theta: float, size: int) -> int:
    target = theta * size
    m = round(target)
    if abs(target - m) > 1e-9:
        raise LatticeError(f"{name} = {theta} gives non-integral success count {target}")
    if not 0 <= m <= size:
        raise ValidationError(f"{name} = {theta} outside [0, 1]")
    return int(m)


def _summary_stats(estimates: np.ndarray) -> tuple[float, float, float]:
    mean = float(estimates.mean())
    var = float(estimates.var(ddof=1)) if len(estimates) > 1 else 0.0
    se = float(np.sqrt(var / len(estimates)))
    return mean, var, se


def simulate_stratified(
    pop: StratifiedPopulation,
    alloc: Allocation,
    theta1: float,
    theta2: float,
    cfg: SimulationConfig,
) -> SimulationSummary:
    """Replicate the stratified estimator with both proportions known."""
    M1 = _integral_successes("theta1", theta1, pop.N1)
    M2 = _integral_successes("theta2", theta2, pop.N2)
    if not (1 <= alloc.n1 <= pop.N1 and 1 <= alloc.n2 <= pop.N2):
        raise ValidationError("allocation outside stratum bounds")
    u = _uniform_rows(cfg.seed, cfg.replications, 2)
    x1 = quantile(HypergeomParams(pop.N1, M1, alloc.n1), u[:, 0])
    x2 = quantile(HypergeomParams(pop.N2, M2, alloc.n2), u[:, 1])
    w1 = pop.N1 / pop.N
    w2 = pop.N2 / pop.N
    estimates = w1 * x1 / alloc.n1 + w2 * x2 / alloc.n2
    mean, var, se = _summary_stats(estimates)
    return SimulationSummary(
        estimator_mean=mean,
        estimator_variance=var,
        standard_error_mean=se,
        replications=cfg.replications,
    )


def simulate_averaged(
    pop: StratifiedPopulation,
    alloc: Allocation,
    theta,
    cfg: SimulationConfig,
) -> SimulationSummary:
    """Resample the nuisance proportion uniformly, then draw the estimator.

    The raw replication variance includes the spread of the conditional
    means across nuisance values, which the averaged-variance identity does
    not; ``within_variance`` pools the per-nuisance conditional variances
    and is the quantity comparable to the identity.
    """
    m = _lattice_numerator(pop, theta)
    if not (1 <= alloc.n1 <= pop.N1 and 1 <= alloc.n2 <= pop.N2):
        raise ValidationError("allocation outside stratum bounds")
    lo = max(0, m - pop.N2)
    hi = min(pop.N1, m)
    L = hi - lo + 1
    u = _uniform_rows(cfg.seed, cfg.replications, 3)
    picks = np.minimum((u[:, 0] * L).astype(np.int64), L - 1) + lo

    x1 = np.empty(cfg.replications, dtype=np.int64)
    x2 = np.empty(cfg.replications, dtype=np.int64)
    for M1 in range(lo, hi + 1):
        rows = np.nonzero(picks == M1)[0]
        if len(rows) == 0:
            continue
        x1[rows] = quantile(HypergeomParams(pop.N1, M1, alloc.n1), u[rows, 1])
        x2[rows] = quantile(HypergeomParams(pop.N2, m - M1, alloc.n2), u[rows, 2])

    w1 = pop.N1 / pop.N
    w2 = pop.N2 / pop.N
    estimates = w1 * x1 / alloc.n1 + w2 * x2 / alloc.n2
    mean, var, se = _summary_stats(estimates)

    # Pooled within-nuisance variance: sum of squared deviations from each
    # group's own mean, divided by (replications - groups present).
    ss_within = 0.0
    groups = 0
    for M1 in range(lo, hi + 1):
        rows = estimates[picks == M1]
        if len(rows) == 0:
            continue
        groups += 1
        ss_within += float(((rows - rows.mean()) ** 2).sum())
    denom = max(cfg.replications - groups, 1)
    return SimulationSummary(
        estimator_mean=mean,
        estimator_variance=var,
        standard_error_mean=se,
        replications=cfg.replications,
        within_variance=ss_within / denom,
    )


def simulate_classical(
    pop: StratifiedPopulation,
    budget: CostBudget,
    theta,
    cfg: SimulationConfig,
) -> SimulationSummary:
    """Replicate unstratified sampling: realized cost and the estimator.

    The stratum-1 share of a simple random sample is itself hypergeometric,
    so the realized cost ``c1*eta1 + c2*(n - eta1)`` fluctuates around
    ``(w1 c1 + w2 c2) * n``.
    """
    m = _lattice_numerator(pop, theta)
    _, n = classical_sample_size(pop, budget)
    n = min(n, pop.N)
    if n < 1:
        raise ValidationError("budget affords no classical sample")
    u = _uniform_rows(cfg.seed, cfg.replications, 2)
    eta1 = quantile(HypergeomParams(pop.N, pop.N1, n), u[:, 0])
    xi = quantile(HypergeomParams(pop.N, m, n), u[:, 1])
    costs = budget.c1 * eta1 + budget.c2 * (n - eta1)
    estimates = xi / n
    mean, var, se = _summary_stats(estimates)
    cost_var = float(costs.var(ddof=1)) if cfg.replications > 1 else 0.0
    return SimulationSummary(
        estimator_mean=mean,
        estimator_variance=var,
        standard_error_mean=se,
        replications=cfg.replications,
        expected_cost_empirical=float(costs.mean()),
        cost_standard_error=float(np.sqrt(cost_var / cfg.replications)),
    )
