"""Exact hypergeometric pmf, moments, and inverse-CDF sampling.

The pmf is evaluated with exact integer binomials for small populations and
with log-gamma arithmetic (one exponentiation) for large ones, so oracle
tests can trust small cases to the last bit while desk-scale populations
stay fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .population import ValidationError

# Largest population for which the pmf uses exact integer binomials.
EXACT_LIMIT = 2000


@dataclass(frozen=True)
class HypergeomParams:
    """Population size, success count, and draw count for one stratum."""

    Npop: int
    K: int
    n: int

    def __post_init__(self) -> None:
        for name, value in (("Npop", self.Npop), ("K", self.K), ("n", self.n)):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"{name} must be an integer, got {value!r}")
        if self.Npop < 1:
            raise ValidationError(f"Npop must be positive, got {self.Npop}")
        if not 0 <= self.K <= self.Npop:
            raise ValidationError(f"need 0 <= K <= Npop, got K = {self.K}")
        if not 0 <= self.n <= self.Npop:
            raise ValidationError(f"need 0 <= n <= Npop, got n = {self.n}")

    def support(self) -> range:
        lo = max(0, self.n - (self.Npop - self.K))
        hi = min(self.n, self.K)
        return range(lo, hi + 1)


def _log_binom(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def pmf(p: HypergeomParams, x: int) -> float:
    """P{xi = x} = C(K,x) C(Npop-K, n-x) / C(Npop, n); 0 off the support."""
    if x not in p.support():
        return 0.0
    if p.Npop <= EXACT_LIMIT:
        num = math.comb(p.K, x) * math.comb(p.Npop - p.K, p.n - x)
        return num / math.comb(p.Npop, p.n)
    log_p = (
        _log_binom(p.K, x)
        + _log_binom(p.Npop - p.K, p.n - x)
        - _log_binom(p.Npop, p.n)
    )
    return math.exp(log_p)


def moments(p: HypergeomParams) -> tuple[float, float]:
    """Mean n*K/Npop and variance n*(K/Npop)(1-K/Npop)(Npop-n)/(Npop-1)."""
    if p.Npop < 2:
        raise ValidationError("moments need Npop >= 2")
    rate = p.K / p.Npop
    mean = p.n * rate
    var = p.n * rate * (1.0 - rate) * (p.Npop - p.n) / (p.Npop - 1.0)
    return mean, var


_PMF_CACHE: dict[HypergeomParams, tuple[np.ndarray, np.ndarray]] = {}


def pmf_table(p: HypergeomParams) -> tuple[np.ndarray, np.ndarray]:
    """Support values and their probabilities, via the pmf ratio recurrence.

    Anchored at the lower support endpoint with :func:`pmf`. Cached; the
    returned arrays are read-only.
    """
    cached = _PMF_CACHE.get(p)
    if cached is not None:
        return cached
    sup = p.support()
    xs = np.arange(sup.start, sup.stop, dtype=np.int64)
    probs = np.empty(len(xs), dtype=np.float64)
    probs[0] = pmf(p, sup.start)
    for i, x in enumerate(xs[:-1]):
        # pmf(x+1)/pmf(x) for the hypergeometric law
        ratio = ((p.K - x) * (p.n - x)) / ((x + 1) * (p.Npop - p.K - p.n + x + 1))
        probs[i + 1] = probs[i] * ratio
    xs.setflags(write=False)
    probs.setflags(write=False)
    _PMF_CACHE[p] = (xs, probs)
    return xs, probs


def quantile(p: HypergeomParams, u):
    """Inverse CDF along the support; ``u`` may be a scalar or an array."""
    xs, probs = pmf_table(p)
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, len(xs) - 1)
    return xs[idx]


def sample(p: HypergeomParams, rng: np.random.Generator) -> int:
    """One exact draw by inverse-CDF walk, consuming one uniform from ``rng``."""
    return int(quantile(p, rng.random()))


def sample_many(p: HypergeomParams, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` exact draws, one uniform per draw, in stream order."""
    return quantile(p, rng.random(size))
