"""Two-stratum population, sampling costs, and allocation domain types.

Values are immutable after construction and validated eagerly. Stratum
weights are exposed as exact rationals derived from the integer stratum
sizes, so lattice computations downstream never see float drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


class ValidationError(ValueError):
    """Structurally invalid population, cost, or allocation inputs."""


class InfeasibleBudgetError(ValueError):
    """Budget violates the sampling model's feasibility assumptions."""


def _require_positive_int(name: str, value) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if value <= 0:
        raise ValidationError(f"{name} must be positive, got {value}")


def _require_positive_real(name: str, value) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class StratifiedPopulation:
    """Finite population of ``N`` units split into two disjoint strata."""

    N: int
    N1: int
    N2: int

    def __post_init__(self) -> None:
        _require_positive_int("N", self.N)
        _require_positive_int("N1", self.N1)
        _require_positive_int("N2", self.N2)
        if self.N1 + self.N2 != self.N:
            raise ValidationError(
                f"stratum sizes {self.N1} + {self.N2} do not add up to N = {self.N}"
            )
        if self.N1 < 2 or self.N2 < 2:
            raise ValidationError(
                "each stratum needs at least 2 units (variance terms divide by N_k - 1)"
            )

    @property
    def w1(self) -> Fraction:
        """Exact stratum-1 weight N1/N."""
        return Fraction(self.N1, self.N)

    @property
    def w2(self) -> Fraction:
        """Exact stratum-2 weight N2/N; w1 + w2 == 1 identically."""
        return Fraction(self.N2, self.N)

    def swapped(self) -> "StratifiedPopulation":
        """The same population with the stratum labels exchanged."""
        return StratifiedPopulation(self.N, self.N2, self.N1)


@dataclass(frozen=True)
class CostBudget:
    """Per-unit sampling costs for each stratum and the total budget."""

    c1: float
    c2: float
    C: float

    def __post_init__(self) -> None:
        _require_positive_real("c1", self.c1)
        _require_positive_real("c2", self.c2)
        _require_positive_real("C", self.C)
        if self.C < self.c1 + self.c2:
            raise InfeasibleBudgetError(
                f"budget C = {self.C} cannot afford one unit per stratum "
                f"(c1 + c2 = {self.c1 + self.c2})"
            )

    def cost(self, n1: float, n2: float) -> float:
        return self.c1 * n1 + self.c2 * n2

    def swapped(self) -> "CostBudget":
        return CostBudget(self.c2, self.c1, self.C)


@dataclass(frozen=True)
class Allocation:
    """Integer sample sizes drawn from each stratum."""

    n1: int
    n2: int

    def __post_init__(self) -> None:
        for name, value in (("n1", self.n1), ("n2", self.n2)):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise ValidationError(f"{name} must be non-negative, got {value}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def swapped(self) -> "Allocation":
        return Allocation(self.n2, self.n1)


def build_population(
    N: int,
    w1: float | Fraction | None = None,
    N1: int | None = None,
) -> StratifiedPopulation:
    """Build a two-stratum population from ``N`` and either ``w1`` or ``N1``.

    ``w1 * N`` must be an integer within 1e-9 absolute; both strata must end
    up with at least 2 units.
    """
    _require_positive_int("N", N)
    if N < 4:
        raise ValidationError(f"N must be at least 4, got {N}")
    if (w1 is None) == (N1 is None):
        raise ValidationError("specify exactly one of w1 and N1")
    if N1 is None:
        target = w1 * N
        nearest = round(target)
        if abs(target - nearest) > 1e-9:
            raise ValidationError(
                f"w1 = {w1} gives non-integer stratum size w1*N = {float(target)}"
            )
        N1 = int(nearest)
    else:
        _require_positive_int("N1", N1)
    if N1 >= N:
        raise ValidationError(f"N1 = {N1} must be smaller than N = {N}")
    return StratifiedPopulation(N, N1, N - N1)


def canonicalize(
    pop: StratifiedPopulation, budget: CostBudget
) -> tuple[StratifiedPopulation, CostBudget, bool]:
    """Relabel strata so that w1 <= w2, swapping costs alongside.

    Returns ``(pop, budget, swapped)``. Idempotent; the boundary w1 == 1/2
    is left untouched.
    """
    if pop.N1 > pop.N2:
        return pop.swapped(), budget.swapped(), True
    return pop, budget, False


@dataclass(frozen=True)
class FeasibleRange:
    """Continuous and integer ranges of admissible stratum-1 sample sizes.

    ``hi`` is clamped so that 1 <= n2 <= N2 and n1 <= N1 hold along the
    budget line; ``hi_parity`` is the unclamped bracket C/c1 used by the
    reference golden-section algorithm.
    """

    lo: float
    hi: float
    hi_parity: float
    n1_min: int
    n1_max: int

    def contains(self, n1: float) -> bool:
        return self.lo <= n1 <= self.hi


def validate_budget(pop: StratifiedPopulation, budget: CostBudget) -> FeasibleRange:
    """Feasible range of n1 values given ``n2 = (C - c1*n1)/c2``.

    Raises :class:`InfeasibleBudgetError` when the budget covers a full
    census (the model assumes c1*N1 + c2*N2 > C) or when no integer n1
    yields 1 <= n2 <= N2.
    """
    census_cost = budget.c1 * pop.N1 + budget.c2 * pop.N2
    if census_cost <= budget.C:
        raise InfeasibleBudgetError(
            f"budget C = {budget.C} covers a full census (cost {census_cost}); "
            "the allocation problem assumes c1*N1 + c2*N2 > C"
        )
    hi = min(
        budget.C / budget.c1,
        float(pop.N1),
        (budget.C - budget.c2) / budget.c1,
    )
    lo = max(1.0, (budget.C - budget.c2 * pop.N2) / budget.c1)
    n1_min = math.ceil(lo - 1e-9)
    n1_max = math.floor(hi + 1e-9)
    if n1_max < n1_min:
        raise InfeasibleBudgetError(
            f"no integer n1 satisfies 1 <= n1 <= {hi} with 1 <= n2 <= N2"
        )
    return FeasibleRange(
        lo=lo,
        hi=hi,
        hi_parity=budget.C / budget.c1,
        n1_min=n1_min,
        n1_max=n1_max,
    )
