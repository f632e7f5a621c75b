"""Worst-case averaged variance of the two-stratum proportion estimator.

The estimator ``w1*x1/n1 + w2*x2/n2`` has a variance that depends on the
unknown stratum-1 proportion. Averaging that variance uniformly over every
stratum-1 proportion consistent with a given overall proportion ``theta``
yields a piecewise-quadratic function of ``theta``:

* a quadratic through the origin on ``(0, w1)`` (mirrored on ``(1-w1, 1)``),
* a shifted multiple of ``theta*(1-theta)`` on ``[w1, 1-w1]``.

This module provides the exact lattice average, the closed-form fast path,
the vertex analysis of the left region, and the maximization over ``theta``
that the allocator minimizes.

Two evaluation conventions are supported. In ``parity`` mode the stratum-2
sample size enters the formulas as the real value ``(C - c1*n1)/c2``,
matching the reference algorithm that produced the published tables. In
``oracle`` mode it is floored to an integer and ``theta`` is restricted to
the ``m/N`` lattice, which is the regime where the closed forms agree with
the brute-force average to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .population import (
    Allocation,
    CostBudget,
    StratifiedPopulation,
    ValidationError,
)

PARITY = "parity"
ORACLE = "oracle"
MODES = (PARITY, ORACLE)


class LatticeError(ValueError):
    """theta is not a lattice point m/N (required for exact averaging)."""


class CensusAllocationError(ValueError):
    """Both strata fully sampled: the worst-case theta is undefined."""


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")


def n2_from_budget(budget: CostBudget, n1: float, mode: str = PARITY) -> float:
    """Stratum-2 sample size implied by spending the rest of the budget."""
    _check_mode(mode)
    raw = (budget.C - budget.c1 * n1) / budget.c2
    if mode == PARITY:
        return raw
    return float(math.floor(raw + 1e-9))


def _lattice_numerator(pop: StratifiedPopulation, theta) -> int:
    """m such that theta == m/N, validating lattice membership."""
    if isinstance(theta, Fraction):
        scaled = theta * pop.N
        if scaled.denominator != 1:
            raise LatticeError(f"theta = {theta} is not a multiple of 1/{pop.N}")
        m = int(scaled)
    else:
        target = float(theta) * pop.N
        m = round(target)
        if abs(target - m) > 1e-9:
            raise LatticeError(f"theta = {theta} is not a multiple of 1/{pop.N}")
    if not 0 <= m <= pop.N:
        raise ValidationError(f"theta = {theta} outside [0, 1]")
    return m


@dataclass(frozen=True)
class NuisanceSet:
    """Admissible stratum-1 proportions for a given overall proportion."""

    a_theta: Fraction
    b_theta: Fraction
    step: Fraction
    values: tuple[Fraction, ...]

    @property
    def L_theta(self) -> int:
        return len(self.values)


def nuisance_set(pop: StratifiedPopulation, theta) -> NuisanceSet:
    """The lattice {a, a + 1/N1, ..., b} of stratum-1 proportions.

    ``a = max(0, (theta - w2)/w1)`` and ``b = min(1, theta/w1)``, both exact
    rationals; every value pairs with an integral stratum-2 success count.
    """
    m = _lattice_numerator(pop, theta)
    lo = max(0, m - pop.N2)
    hi = min(pop.N1, m)
    return NuisanceSet(
        a_theta=Fraction(lo, pop.N1),
        b_theta=Fraction(hi, pop.N1),
        step=Fraction(1, pop.N1),
        values=tuple(Fraction(M1, pop.N1) for M1 in range(lo, hi + 1)),
    )


def _check_stratum_sizes(pop: StratifiedPopulation, n1: float, n2: float) -> None:
    if not 1 <= n1 <= pop.N1:
        raise ValidationError(f"need 1 <= n1 <= N1 = {pop.N1}, got n1 = {n1}")
    if not 0 < n2 <= pop.N2:
        raise ValidationError(f"need 0 < n2 <= N2 = {pop.N2}, got n2 = {n2}")


def variance_known_thetas(
    pop: StratifiedPopulation, alloc: Allocation, theta1: float, theta2: float
) -> float:
    """Estimator variance when both stratum proportions are known.

    ``sum_k w_k^2 * theta_k(1-theta_k)/n_k * (N_k-n_k)/(N_k-1)``.
    """
    _check_stratum_sizes(pop, alloc.n1, alloc.n2)
    w1 = pop.N1 / pop.N
    w2 = pop.N2 / pop.N
    return (
        w1 * w1 * theta1 * (1.0 - theta1) / alloc.n1 * (pop.N1 - alloc.n1) / (pop.N1 - 1)
        + w2 * w2 * theta2 * (1.0 - theta2) / alloc.n2 * (pop.N2 - alloc.n2) / (pop.N2 - 1)
    )


def averaged_variance_exact(pop: StratifiedPopulation, alloc: Allocation, theta) -> float:
    """Uniform average of the known-thetas variance over the nuisance set.

    Summed in ascending stratum-1 proportion with exact (compensated)
    accumulation, so the result is deterministic.
    """
    _check_stratum_sizes(pop, alloc.n1, alloc.n2)
    m = _lattice_numerator(pop, theta)
    lo = max(0, m - pop.N2)
    hi = min(pop.N1, m)
    w1 = pop.N1 / pop.N
    w2 = pop.N2 / pop.N
    b1 = w1 * w1 / alloc.n1 * (pop.N1 - alloc.n1) / (pop.N1 - 1)
    b2 = w2 * w2 / alloc.n2 * (pop.N2 - alloc.n2) / (pop.N2 - 1)
    terms = []
    for M1 in range(lo, hi + 1):
        t1 = M1 / pop.N1
        t2 = (m - M1) / pop.N2
        terms.append(b1 * t1 * (1.0 - t1) + b2 * t2 * (1.0 - t2))
    return math.fsum(terms) / (hi - lo + 1)


def classical_variance(pop: StratifiedPopulation, n: float, theta: float) -> float:
    """Variance of the unstratified estimator: theta(1-theta)/n * (N-n)/(N-1)."""
    if not 1 <= n <= pop.N:
        raise ValidationError(f"need 1 <= n <= N = {pop.N}, got n = {n}")
    return theta * (1.0 - theta) / n * (pop.N - n) / (pop.N - 1)


def _fpc_over_n(Nk: int, nk: float) -> float:
    return (Nk - nk) / (nk * (Nk - 1.0))


def _left_region(pop: StratifiedPopulation, n1: float, n2: float, theta: float) -> float:
    """Averaged variance for 0 < theta < w1: quadratic with a root at 0."""
    N, N1, N2 = pop.N, pop.N1, pop.N2
    a1 = _fpc_over_n(N1, n1)
    a2 = _fpc_over_n(N2, n2)
    s = (3 * N1 - 1) * a1 + (3 * N2 - 1) * a2
    return theta / (6.0 * N) * (s - 2.0 * theta * N * (a1 + a2))


def _middle_region(pop: StratifiedPopulation, n1: float, n2: float, theta: float) -> float:
    """Averaged variance for w1 <= theta <= 1 - w1."""
    N, N1, N2 = pop.N, pop.N1, pop.N2
    w1 = N1 / N
    num = (
        2.0 * n1 * n2 * w1 * (N + 1)
        + N1 * N2 * ((n1 + n2) * w1 - 3.0 * n1)
        - N1 * (n2 * w1 + n1 * (1.0 - w1))
    )
    return num / (6.0 * N * n1 * n2 * (N2 - 1)) + (N2 - n2) * (1.0 - theta) * theta / (
        n2 * (N2 - 1.0)
    )


def _closed_eval(pop: StratifiedPopulation, n1: float, n2: float, theta: float) -> float:
    # Reflect onto [0, 1/2]; the construction makes D(theta) == D(1-theta).
    if theta > 0.5:
        theta = 1.0 - theta
    if theta <= 0.0:
        return 0.0
    if theta < pop.N1 / pop.N:
        return _left_region(pop, n1, n2, theta)
    return _middle_region(pop, n1, n2, theta)


def averaged_variance_closed(
    pop: StratifiedPopulation,
    budget: CostBudget,
    n1: float,
    theta: float,
    mode: str = PARITY,
) -> float:
    """Closed-form averaged variance with n2 taken from the budget line.

    Piecewise: the left-region quadratic on ``(0, w1)``, the middle form on
    ``[w1, 1-w1]``, the left form at ``1-theta`` beyond; 0 at the endpoints.
    """
    n2 = n2_from_budget(budget, n1, mode)
    _check_stratum_sizes(pop, n1, n2)
    return _closed_eval(pop, n1, n2, theta)


def theta_star(
    pop: StratifiedPopulation, budget: CostBudget, n1: float, mode: str = PARITY
) -> float:
    """Vertex of the left-region quadratic.

    Meaningful as a worst case only when it lies in ``(0, w1)``; callers
    clamp. Raises :class:`CensusAllocationError` when both strata are fully
    sampled (the quadratic degenerates).
    """
    n2 = n2_from_budget(budget, n1, mode)
    _check_stratum_sizes(pop, n1, n2)
    return _vertex(pop, n1, n2)[0]


def _vertex(pop: StratifiedPopulation, n1: float, n2: float) -> tuple[float, float]:
    """(vertex theta, vertex value) of the left-region quadratic."""
    N, N1, N2 = pop.N, pop.N1, pop.N2
    a1 = _fpc_over_n(N1, n1)
    a2 = _fpc_over_n(N2, n2)
    t = a1 + a2
    if t == 0.0:
        raise CensusAllocationError(
            "both strata fully sampled; the left-region quadratic is identically zero"
        )
    s = (3 * N1 - 1) * a1 + (3 * N2 - 1) * a2
    return s / (4.0 * N * t), s * s / (48.0 * N * N * t)


def vertex_variance(
    pop: StratifiedPopulation, budget: CostBudget, n1: float, mode: str = PARITY
) -> float:
    """Value of the left-region quadratic at its vertex (audit helper)."""
    n2 = n2_from_budget(budget, n1, mode)
    _check_stratum_sizes(pop, n1, n2)
    return _vertex(pop, n1, n2)[1]


def half_variance_alt(
    pop: StratifiedPopulation, budget: CostBudget, n1: float, mode: str = PARITY
) -> float:
    """Alternative printed closed form for the value at theta = 1/2.

    Audit-only: desk evaluation shows it disagrees with the middle-region
    form it should equal; it is never used as a computation path.
    """
    n2 = n2_from_budget(budget, n1, mode)
    _check_stratum_sizes(pop, n1, n2)
    N, N1, N2 = pop.N, pop.N1, pop.N2
    return (
        N1 * (N1 - n1) / n1
        + (3.0 * N2 * N2 - (N1 + 1) ** 2 + 1) / (2.0 * N1) * (N2 - n2) / n2
    ) / (6.0 * N * N)


@dataclass(frozen=True)
class MaxVarianceResult:
    """Worst-case theta, the variance there, and which regime produced it."""

    theta_tilde: float
    value: float
    regime: str  # "at-half" | "at-theta-star"


def max_variance(
    pop: StratifiedPopulation, budget: CostBudget, n1: float, mode: str = PARITY
) -> MaxVarianceResult:
    """Maximize the averaged variance over theta for a fixed n1.

    The maximum of the piecewise form lies either at the vertex of the left
    quadratic (when that vertex falls inside ``(0, w1)``) or at ``theta =
    1/2``; the region boundary ``w1`` is also evaluated. In oracle mode the
    candidates are snapped to neighbouring lattice points so the result
    matches an exhaustive lattice scan.
    """
    n2 = n2_from_budget(budget, n1, mode)
    _check_stratum_sizes(pop, n1, n2)
    w1 = pop.N1 / pop.N
    vertex_theta, _ = _vertex(pop, n1, n2)

    candidates: list[tuple[float, str]] = []
    if mode == PARITY:
        candidates.append((0.5, "at-half"))
        candidates.append((w1, "at-half"))
        if 0.0 < vertex_theta < w1:
            candidates.append((vertex_theta, "at-theta-star"))
    else:
        candidates.append(((pop.N // 2) / pop.N, "at-half"))
        candidates.append((pop.N1 / pop.N, "at-half"))
        if 0.0 < vertex_theta < w1:
            m_star = math.floor(vertex_theta * pop.N)
            for m in (m_star, m_star + 1):
                if 1 <= m <= pop.N1:
                    candidates.append((m / pop.N, "at-theta-star"))

    best_theta, best_value, best_regime = 0.5, -math.inf, "at-half"
    for theta, regime in candidates:
        value = _closed_eval(pop, n1, n2, theta)
        if value > best_value:
            best_theta, best_value, best_regime = theta, value, regime
    return MaxVarianceResult(theta_tilde=best_theta, value=best_value, regime=best_regime)


def classical_max_variance(
    pop: StratifiedPopulation, budget: CostBudget, integer_n: bool = True
) -> float:
    """Worst-case (theta = 1/2) variance of the unstratified estimator.

    With ``integer_n`` the sample size is floored as in the reference run:
    ``(N - floor(n_c)) / (4 (N-1) floor(n_c))``. Otherwise the closed form
    ``(c1 N1 + c2 N2)/(4 C (N-1)) - 1/(4 (N-1))`` in the real sample size.
    """
    w1 = pop.N1 / pop.N
    w2 = pop.N2 / pop.N
    if integer_n:
        n_c = int(budget.C / (w1 * budget.c1 + w2 * budget.c2))
        if n_c < 1:
            raise ValidationError("budget affords no classical sample")
        n_c = min(n_c, pop.N)
        return (pop.N - n_c) / (4.0 * (pop.N - 1) * n_c)
    return (budget.c1 * pop.N1 + budget.c2 * pop.N2) / (
        4.0 * budget.C * (pop.N - 1)
    ) - 1.0 / (4.0 * (pop.N - 1))


@dataclass(frozen=True)
class VarianceCurve:
    """Tabulated stratified and classical variances over a theta grid."""

    points: tuple[tuple[float, float, float], ...]
    pop: StratifiedPopulation
    budget: CostBudget
    n1: float
    n2: float
    n_classical: int
    mode: str


def emit_curve(
    pop: StratifiedPopulation,
    budget: CostBudget,
    n1: float,
    step: float = 0.001,
    mode: str = PARITY,
) -> VarianceCurve:
    """Tabulate both variances over theta in {0, step, ..., 1}.

    The classical curve uses the integer classical sample size for the same
    budget.
    """
    if not 0.0 < step <= 0.01:
        raise ValidationError(f"step must be in (0, 0.01], got {step}")
    n2 = n2_from_budget(budget, n1, mode)
    _check_stratum_sizes(pop, n1, n2)
    w1 = pop.N1 / pop.N
    w2 = pop.N2 / pop.N
    n_c = int(budget.C / (w1 * budget.c1 + w2 * budget.c2))
    n_c = max(1, min(n_c, pop.N))
    count = round(1.0 / step)
    points = []
    for i in range(count + 1):
        theta = i / count
        points.append(
            (
                theta,
                _closed_eval(pop, n1, n2, theta),
                classical_variance(pop, n_c, theta),
            )
        )
    return VarianceCurve(
        points=tuple(points),
        pop=pop,
        budget=budget,
        n1=n1,
        n2=n2,
        n_classical=n_c,
        mode=mode,
    )
