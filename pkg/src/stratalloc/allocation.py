"""Minimax allocation of the sampling budget between two strata.

The allocator minimizes the worst-case averaged variance over the feasible
stratum-1 sample sizes. The search mirrors the reference algorithm: a
golden-section pass with ratio (sqrt(5)-1)/2 and termination width 0.1,
taking the integer part of the final interval midpoint, followed by an
exhaustive integer refinement of the neighbourhood (the reference algorithm
alone can land one unit off a tie). Classical and known-proportions
baselines and report assembly live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import refdata
from .population import (
    Allocation,
    CostBudget,
    InfeasibleBudgetError,
    StratifiedPopulation,
    ValidationError,
    canonicalize,
    validate_budget,
)
from .variance import (
    PARITY,
    MaxVarianceResult,
    averaged_variance_closed,
    classical_max_variance,
    half_variance_alt,
    max_variance,
    n2_from_budget,
    theta_star,
    vertex_variance,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_EPS = 0.1
_REFINE_WINDOW = 5


class RootBracketError(RuntimeError):
    """A root finder could not bracket a sign change."""


class DegenerateProportionError(ValueError):
    """A stratum proportion of 0 or 1 leaves zero within-stratum deviation."""


def classical_sample_size(
    pop: StratifiedPopulation, budget: CostBudget
) -> tuple[float, int]:
    """Expected sample size ``C / (w1 c1 + w2 c2)`` and its integer part."""
    w1 = pop.N1 / pop.N
    w2 = pop.N2 / pop.N
    n_real = budget.C / (w1 * budget.c1 + w2 * budget.c2)
    return n_real, int(n_real)


def neyman_allocation(
    pop: StratifiedPopulation, budget: CostBudget, theta1: float, theta2: float
) -> tuple[float, float, float]:
    """Variance-minimizing allocation for known stratum proportions.

    Returns ``(n, n1, n2)``; the cost identity ``c1 n1 + c2 n2 == C`` holds
    by construction.
    """
    for name, t in (("theta1", theta1), ("theta2", theta2)):
        if not 0.0 < t < 1.0:
            raise DegenerateProportionError(
                f"{name} = {t} leaves no within-stratum deviation; "
                "the optimal-allocation formula degenerates"
            )
    d1 = math.sqrt(theta1 * (1.0 - theta1))
    d2 = math.sqrt(theta2 * (1.0 - theta2))
    per_cost = pop.N1 * d1 / math.sqrt(budget.c1) + pop.N2 * d2 / math.sqrt(budget.c2)
    times_cost = pop.N1 * d1 * math.sqrt(budget.c1) + pop.N2 * d2 * math.sqrt(budget.c2)
    n = budget.C * per_cost / times_cost
    n1 = n * pop.N1 * d1 / math.sqrt(budget.c1) / per_cost
    n2 = n * pop.N2 * d2 / math.sqrt(budget.c2) / per_cost
    return n, n1, n2


def reduction(v_stratified: float, v_classical: float) -> float:
    """Percent reduction of the stratified worst case vs the classical one."""
    if v_classical <= 0.0:
        raise ValidationError("classical variance must be positive")
    return (1.0 - v_stratified / v_classical) * 100.0


def n1_closed_form(pop: StratifiedPopulation, budget: CostBudget) -> float:
    """Closed-form optimal n1 for the at-half regime, un-rounded.

    ``C sqrt(N2-1) w1 / (c1 sqrt(N2-1) w1 + sqrt(c1 c2 w2 (N (w1^2 - 3 w1
    + 1.5) - w1)))``. Callers floor it; near the regime switch it visibly
    disagrees with the minimax optimizer, so it is never the source of
    record.
    """
    N, N2 = pop.N, pop.N2
    w1 = pop.N1 / pop.N
    w2 = pop.N2 / pop.N
    root = math.sqrt(N2 - 1.0)
    radicand = budget.c1 * budget.c2 * w2 * (N * (w1 * w1 - 3.0 * w1 + 1.5) - w1)
    if radicand < 0.0:
        raise ValidationError("closed-form radicand negative; needs w1 <= 1/2, N >= 4")
    return budget.C * root * w1 / (budget.c1 * root * w1 + math.sqrt(radicand))


def audit_limits(N: int, w1: float) -> tuple[float, float]:
    """The two printed limit ratios of at-half to at-vertex worst cases.

    ``ratio_at_zero`` is the n1 -> 0 limit, ``ratio_at_full`` the
    n1 -> C/c1 limit; both evaluated verbatim for the audit report.
    """
    if N < 4 or not 0.0 < w1 <= 0.5:
        raise ValidationError("need N >= 4 and 0 < w1 <= 0.5")
    at_zero = 8.0 * N * w1 * (N * w1 - 1.0) / (3.0 * N * w1 - 1.0) ** 2
    at_full = (
        4.0
        * (N * (1.0 - w1) - 1.0)
        * (N * (3.0 - 6.0 * w1 + 2.0 * w1 * w1) - 2.0 * w1)
        / ((3.0 * N * (1.0 - w1) - 1.0) ** 2 * w1)
    )
    return at_zero, at_full


def w1_star(N: int) -> float:
    """Root in (0, 0.5] of the printed n1 -> C/c1 limit ratio minus one.

    Located by bisection; the residual ``|ratio - 1|`` at the returned root
    is below 1e-9. Raises :class:`RootBracketError` when the ratio does not
    change sign on (0, 0.5].
    """
    if N < 4:
        raise ValidationError(f"N must be at least 4, got {N}")

    def f(w: float) -> float:
        return audit_limits(N, w)[1] - 1.0

    lo, hi = 1e-9, 0.5
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise RootBracketError(
            f"limit ratio does not cross 1 on (0, 0.5] for N = {N}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0 or hi - lo < 1e-14:
            return mid
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def regime_switch_w1(
    N: int, budget: CostBudget, grid_step: float = 0.001, mode: str = PARITY
) -> float | None:
    """Smallest grid weight whose worst case sits at the interior vertex.

    Scans admissible w1 values in ascending order and, for each, evaluates
    the worst case at the top of the feasible n1 range. Populations up to
    1e4 units are scanned over every admissible stratum split; larger ones
    over a ``grid_step`` grid. Returns ``None`` when no switch occurs.
    """
    if N <= 10_000:
        n1_values = range(2, N // 2 + 1)
    else:
        seen: set[int] = set()
        n1_values = []
        steps = int(round(0.5 / grid_step))
        for k in range(1, steps + 1):
            cand = round(k * grid_step * N)
            if 2 <= cand <= N // 2 and cand not in seen:
                seen.add(cand)
                n1_values.append(cand)
    for N1 in n1_values:
        pop = StratifiedPopulation(N, N1, N - N1)
        try:
            feasible = validate_budget(pop, budget)
        except InfeasibleBudgetError:
            continue
        result = max_variance(pop, budget, feasible.n1_max, mode)
        if result.regime == "at-theta-star":
            return N1 / N
    return None


def _left_max_value(
    pop: StratifiedPopulation, budget: CostBudget, n1: float, mode: str
) -> float:
    """Supremum of the averaged variance over the left region (0, w1]."""
    w1 = pop.N1 / pop.N
    vertex_theta = theta_star(pop, budget, n1, mode)
    if 0.0 < vertex_theta < w1:
        return vertex_variance(pop, budget, n1, mode)
    return averaged_variance_closed(pop, budget, n1, w1, mode)


def n1_star(pop: StratifiedPopulation, budget: CostBudget, mode: str = PARITY) -> float:
    """n1 at which the two regime maxima cross, by bisection.

    The left-region maximum dominates for small n1 and the value at
    theta = 1/2 for large n1; at the root the two branch values agree to
    1e-9 relative. Raises :class:`RootBracketError` when the branches do
    not cross on the feasible range.
    """
    feasible = validate_budget(pop, budget)

    def gap(n1: float) -> float:
        return _left_max_value(pop, budget, n1, mode) - averaged_variance_closed(
            pop, budget, n1, 0.5, mode
        )

    lo, hi = feasible.lo, feasible.hi
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo <= 0.0 or g_hi >= 0.0:
        raise RootBracketError(
            "regime maxima do not cross on the feasible range "
            f"(gap({lo}) = {g_lo:.3e}, gap({hi}) = {g_hi:.3e})"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if g_mid == 0.0 or hi - lo < 1e-10 * max(1.0, hi):
            return mid
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _objective(
    pop: StratifiedPopulation, budget: CostBudget, n1: float, mode: str
) -> float:
    return max_variance(pop, budget, n1, mode).value


def optimize_allocation(
    pop: StratifiedPopulation,
    budget: CostBudget,
    mode: str = PARITY,
    exhaustive: bool = False,
) -> tuple[Allocation, MaxVarianceResult]:
    """Minimize the worst-case averaged variance over feasible n1.

    Golden-section search over the continuous bracket followed by an
    exhaustive integer refinement of ``[n1-5, n1+5]``; ties resolve to the
    smallest n1. ``exhaustive=True`` scans the whole integer range instead
    (desk-scale cross-check). The returned allocation spends the remaining
    budget on stratum 2: ``n2 = floor((C - c1*n1)/c2)``.
    """
    feasible = validate_budget(pop, budget)

    if exhaustive:
        lo_i, hi_i = feasible.n1_min, feasible.n1_max
    else:
        a = feasible.lo
        b = min(feasible.hi_parity, float(pop.N1))
        x_left = b - _GOLDEN * (b - a)
        x_right = a + _GOLDEN * (b - a)
        iterations = 0
        while b - a > _GOLDEN_EPS and iterations < 500:
            val_left = _objective(pop, budget, x_left, mode)
            val_right = _objective(pop, budget, x_right, mode)
            if val_left < val_right:
                b, x_right = x_right, x_left
                x_left = b - _GOLDEN * (b - a)
            else:
                a, x_left = x_left, x_right
                x_right = a + _GOLDEN * (b - a)
            iterations += 1
        center = int((a + b) / 2.0)
        lo_i = max(feasible.n1_min, center - _REFINE_WINDOW)
        hi_i = min(feasible.n1_max, center + _REFINE_WINDOW)

    best_n1 = None
    best: MaxVarianceResult | None = None
    for n1 in range(lo_i, hi_i + 1):
        result = max_variance(pop, budget, n1, mode)
        if best is None or result.value < best.value:
            best_n1, best = n1, result
    assert best_n1 is not None and best is not None
    n2 = int(n2_from_budget(budget, best_n1, "oracle"))
    return Allocation(best_n1, n2), best


@dataclass(frozen=True)
class AllocationReport:
    """One allocation-table row plus per-row audit notes."""

    w1: float
    n1_opt: int
    n2_opt: int
    n_w: int
    n_c: int
    n_c_real: float
    max_var_stratified: float
    theta_tilde: float
    max_var_classical: float
    reduction_percent: float
    mode: str
    audit_notes: tuple[dict, ...] = field(default_factory=tuple)


def _report_audit_notes(
    pop: StratifiedPopulation,
    budget: CostBudget,
    alloc: Allocation,
    result: MaxVarianceResult,
    vc: float,
    red: float,
    mode: str,
) -> tuple[dict, ...]:
    notes: list[dict] = []

    closed = n1_closed_form(pop, budget)
    notes.append(
        {
            "check": "closed-form-allocation",
            "n1_closed_form": closed,
            "n1_closed_floor": int(closed),
            "n1_opt": alloc.n1,
            "agrees": int(closed) == alloc.n1,
        }
    )

    half_alt = half_variance_alt(pop, budget, alloc.n1, mode)
    half_eval = averaged_variance_closed(pop, budget, alloc.n1, 0.5, mode)
    rel_gap = abs(half_alt - half_eval) / max(half_eval, 1e-300)
    notes.append(
        {
            "check": "half-variance-alt-form",
            "alt_value": half_alt,
            "evaluated_value": half_eval,
            "relative_gap": rel_gap,
            "agrees": rel_gap <= 1e-9,
        }
    )

    ref = refdata.reference_row_for(
        pop.N, budget.c1, budget.c2, budget.C, pop.N1 / pop.N
    )
    if ref is not None:
        _, ref_n1, ref_nw, ref_nc, ref_vw, ref_vc, ref_red = ref
        flagged = []
        if alloc.n1 != ref_n1:
            flagged.append("n1_opt")
        if alloc.n != ref_nw:
            flagged.append("n_w")
        if abs(result.value - ref_vw) > refdata.VAR_CELL_TOL:
            flagged.append("max_var_stratified")
        if abs(vc - ref_vc) > refdata.VAR_CELL_TOL:
            flagged.append("max_var_classical")
        if abs(red - ref_red) > refdata.REDUCTION_CELL_TOL:
            flagged.append("reduction_percent")
        notes.append(
            {
                "check": "reference-table-row",
                "reference": {
                    "n1_opt": ref_n1,
                    "n_w": ref_nw,
                    "n_c": ref_nc,
                    "max_var_stratified": ref_vw,
                    "max_var_classical": ref_vc,
                    "reduction_percent": ref_red,
                },
                "flagged_cells": flagged,
                "agrees": not flagged,
            }
        )
    return tuple(notes)


def build_report(
    pop: StratifiedPopulation, budget: CostBudget, mode: str = PARITY
) -> AllocationReport:
    """Optimize, attach the classical baseline, and assemble a table row.

    Inputs are canonicalized internally; if the strata were swapped the
    reported allocation is swapped back to match the caller's labelling.
    """
    input_w1 = pop.N1 / pop.N
    cpop, cbudget, swapped = canonicalize(pop, budget)
    alloc, result = optimize_allocation(cpop, cbudget, mode)
    n_c_real, n_c_int = classical_sample_size(cpop, cbudget)
    vc = classical_max_variance(cpop, cbudget)
    red = reduction(result.value, vc)
    notes = _report_audit_notes(cpop, cbudget, alloc, result, vc, red, mode)
    presented = alloc.swapped() if swapped else alloc
    return AllocationReport(
        w1=input_w1,
        n1_opt=presented.n1,
        n2_opt=presented.n2,
        n_w=presented.n,
        n_c=n_c_int,
        n_c_real=n_c_real,
        max_var_stratified=result.value,
        theta_tilde=result.theta_tilde,
        max_var_classical=vc,
        reduction_percent=red,
        mode=mode,
        audit_notes=notes,
    )
