"""Demand modeling, average delivery rates, and placement optimization.

Average rates are computed analytically: the per-class delivery rate is an
exact rational, the class probabilities come from the popularity model as
floats, and the reported average is the exact rational combination of the
two.  Monte-Carlo estimation exists only as a cross-check.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, comb

from .delivery import count_messages_cl210, rate_formula_cl21
from .general import class_rate_general, pool_capacity

SCHEMES = ("cl21", "cl210", "cl_t_exact", "cl_t_greedy", "conventional",
           "naive_ms", "naive_ms_removal")


@dataclass(frozen=True)
class PopularityModel:
    """Request probabilities in decreasing order, summing to one."""

    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        p = self.probabilities
        if any(x < 0 for x in p):
            raise ValueError("probabilities must be non-negative")
        if any(p[x] < p[x + 1] - 1e-15 for x in range(len(p) - 1)):
            raise ValueError("probabilities must be non-increasing")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    @property
    def N(self) -> int:
        return len(self.probabilities)

    def prefix(self, n: int) -> float:
        return math.fsum(self.probabilities[:n])

    def suffix(self, n: int) -> float:
        return math.fsum(self.probabilities[self.N - n:])


def zipf(N: int, gamma: float) -> PopularityModel:
    """Zipf popularity: the n-th ranked file drawn proportionally to n^-gamma."""
    if N < 1:
        raise ValueError("need at least one file")
    weights = [n ** -gamma for n in range(1, N + 1)]
    total = math.fsum(weights)
    return PopularityModel(tuple(w / total for w in weights))


def profile_distribution(model: PopularityModel, N_h: int, N_r: int,
                         K: int) -> dict[tuple[int, int, int], float]:
    """Multinomial distribution of the demand class under iid requests."""
    if N_h + N_r > model.N:
        raise ValueError("tier sizes exceed the library")
    p_h = model.prefix(N_h)
    p_r = model.suffix(N_r)
    p_l = max(0.0, 1.0 - p_h - p_r)
    mass: dict[tuple[int, int, int], float] = {}
    for kh in range(K + 1):
        for kl in range(K + 1 - kh):
            kr = K - kh - kl
            m = comb(K, kh) * comb(K - kh, kl)
            mass[(kh, kl, kr)] = m * p_h ** kh * p_l ** kl * p_r ** kr
    return mass


def conventional_class_rate(k: tuple[int, int, int], K: int, t: int) -> Fraction:
    """Per-tier delivery with no cross-level pairing, any caching level."""
    kh, kl, kr = k
    cap = pool_capacity(K, t)
    n_t = (comb(K, t + 1) - comb(kl + kr, t + 1)
           + cap * (comb(kl, 2) + kl * (kh + kr)))
    return Fraction(n_t, comb(K, t)) + kr


def class_rate(scheme: str, K: int, t: int, k: tuple[int, int, int]) -> Fraction:
    """Exact delivery rate of one demand class under the given scheme."""
    kh, kl, kr = k
    if scheme == "cl21":
        if t != 2:
            raise ValueError("cl21 requires t == 2")
        if kr:
            raise ValueError("cl21 has no zero tier; use cl210")
        return rate_formula_cl21((kh, kl), K)
    if scheme == "cl210":
        if t != 2:
            raise ValueError("cl210 requires t == 2; use cl_t_exact for t > 2")
        return count_messages_cl210(k, K)[1]
    if scheme == "cl_t_exact":
        return class_rate_general(K, t, k, method="exact")
    if scheme == "cl_t_greedy":
        return class_rate_general(K, t, k, method="greedy")
    if scheme == "conventional":
        return conventional_class_rate(k, K, t)
    raise ValueError(f"scheme {scheme!r} has no per-class rate")


def _average(mass: dict[tuple[int, int, int], float],
             rate: dict[tuple[int, int, int], Fraction]) -> tuple[Fraction, float]:
    exact = sum((Fraction(m) * rate[k] for k, m in mass.items() if m), Fraction(0))
    return exact, float(exact)


@dataclass(frozen=True)
class RateReport:
    scheme: str
    params: dict
    average: Fraction
    per_class: dict[tuple[int, int, int], Fraction] | None
    runtime_ms: float


def average_rate(scheme: str, *, K: int, N: int, M: Fraction | int, gamma: float,
                 t: int = 2, N_r: int = 0,
                 model: PopularityModel | None = None) -> RateReport:
    """Average delivery rate of one scheme at one operating point.

    Tiered schemes group the library with ``group_library`` for the given
    ``N_r``; the naive baselines ignore ``t`` and ``N_r``.
    """
    from .placement import group_library

    start = time.perf_counter()
    M = Fraction(M)
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if model is None:
        model = zipf(N, gamma)
    params = {"K": K, "N": N, "t": t, "M": M, "gamma": gamma, "N_r": N_r}
    if scheme == "naive_ms":
        avg = naive_sharing_rate(K, N, M)
        return RateReport(scheme, params, avg, None,
                          (time.perf_counter() - start) * 1e3)
    if scheme == "naive_ms_removal":
        n_c, avg = naive_removal_rate(K, N, M, model)
        params["N_c"] = n_c
        return RateReport(scheme, params, avg, None,
                          (time.perf_counter() - start) * 1e3)
    grouping = group_library(N, M, t, N_r, K)
    if scheme == "cl21" and N_r:
        raise ValueError("cl21 has no zero tier; use cl210")
    mass = profile_distribution(model, grouping.n_high, N_r, K)
    rates = {k: class_rate(scheme, K, t, k) for k, m in mass.items() if m}
    exact, _ = _average(mass, rates)
    params["N_h"] = grouping.n_high
    return RateReport(scheme, params, exact, rates,
                      (time.perf_counter() - start) * 1e3)


def _average_float(mass: dict[tuple[int, int, int], float],
                   rate_of: dict[tuple[int, int, int], float]) -> float:
    return math.fsum(m * rate_of[k] for k, m in mass.items() if m)


def optimize_uncached(*, K: int, N: int, t: int, M: Fraction | int, gamma: float,
                      scheme: str = "cl210",
                      model: PopularityModel | None = None) -> tuple[int, RateReport]:
    """Scan every feasible uncached-tier size and return the best.

    The scan interval runs from the smallest ``N_r`` that lets the rest be
    cached at level one up to the smallest that lets it all sit at level
    ``t``.  The whole interval is evaluated; no early exit.
    """
    M = Fraction(M)
    if model is None:
        model = zipf(N, gamma)
    nr_min = max(0, ceil(N - M * K))
    nr_max = max(nr_min, ceil(N - M * K / t))
    if nr_min > N:
        raise ValueError("cache size infeasible for this library")
    nr_max = min(nr_max, N)
    float_rates: dict[tuple[int, int, int], float] = {}
    from .placement import group_library

    def scan_value(n_r: int) -> float:
        grouping = group_library(N, M, t, n_r, K)
        mass = profile_distribution(model, grouping.n_high, n_r, K)
        for k, m in mass.items():
            if m and k not in float_rates:
                float_rates[k] = float(class_rate(scheme, K, t, k))
        return _average_float(mass, float_rates)

    best_nr = min(range(nr_min, nr_max + 1), key=lambda n_r: (scan_value(n_r), n_r))
    report = average_rate(scheme, K=K, N=N, M=M, gamma=gamma, t=t, N_r=best_nr,
                          model=model)
    return best_nr, report


def best_tiered_rate(*, K: int, N: int, M: Fraction | int, gamma: float,
                     t_range: tuple[int, ...] | None = None,
                     scheme: str = "cl_t_exact",
                     model: PopularityModel | None = None
                     ) -> tuple[int, int, RateReport]:
    """Minimum average rate over caching levels, each with its best ``N_r``."""
    if model is None:
        model = zipf(N, gamma)
    if t_range is None:
        t_range = tuple(t for t in range(2, K) if comb(K, t) % K == 0)
    best: tuple[int, int, RateReport] | None = None
    for t in t_range:
        if comb(K, t) % K:
            continue
        use = "cl210" if (t == 2 and scheme == "cl210") else scheme
        n_r, report = optimize_uncached(K=K, N=N, t=t, M=M, gamma=gamma,
                                        scheme=use, model=model)
        if best is None or report.average < best[2].average:
            best = (t, n_r, report)
    if best is None:
        raise ValueError("no feasible caching level in range")
    return best


def _restricted_naive_rate(K: int, t_share: Fraction, active: int) -> Fraction:
    """Memory-shared conventional rate serving ``active`` distinct requesters."""
    if t_share < 0 or t_share > K:
        raise ValueError("sharing level out of range")

    def level_rate(t: int) -> Fraction:
        return Fraction(comb(K, t + 1) - comb(K - active, t + 1), comb(K, t))

    if t_share.denominator == 1:
        return level_rate(int(t_share))
    t0 = int(t_share)
    alpha = t_share - t0
    return alpha * level_rate(t0 + 1) + (1 - alpha) * level_rate(t0)


def naive_sharing_rate(K: int, N: int, M: Fraction | int) -> Fraction:
    """Single-level placement of the whole library, full-demand rate.

    Every file is cached identically at level ``MK/N``; a fractional level
    splits each file into two fragments cached at the neighbouring integer
    levels.  Demand-independent, so it is its own average.
    """
    M = Fraction(M)
    if not 0 <= M <= N:
        raise ValueError("cache size must lie in [0, N]")
    return _restricted_naive_rate(K, Fraction(M * K, N), K)


def naive_removal_rate(K: int, N: int, M: Fraction | int,
                       model: PopularityModel) -> tuple[int, Fraction]:
    """Single-level placement of only the most popular files, rest removed.

    The ``N_c`` cached files share the whole cache at level ``MK/N_c``;
    requests outside them are served as whole-file unicasts.  Averaged over
    the binomial split of requesters and optimized over ``N_c`` by full
    scan.  Returns the winning ``N_c`` and its exact average.
    """
    M = Fraction(M)
    if M > N:
        raise ValueError("cache size must lie in [0, N]")
    nc_min = max(1, ceil(M))
    best: tuple[float, int] | None = None
    for n_c in range(nc_min, N + 1):
        p_c = model.prefix(n_c)
        t_share = Fraction(M * K, n_c)
        value = 0.0
        for k_c in range(K + 1):
            m = comb(K, k_c) * p_c ** k_c * (1 - p_c) ** (K - k_c)
            if m:
                value += m * (float(_restricted_naive_rate(K, t_share, k_c)) + (K - k_c))
        if best is None or value < best[0]:
            best = (value, n_c)
    assert best is not None
    n_c = best[1]
    p_c = model.prefix(n_c)
    t_share = Fraction(M * K, n_c)
    exact = sum(
        (Fraction(comb(K, k_c) * p_c ** k_c * (1 - p_c) ** (K - k_c))
         * (_restricted_naive_rate(K, t_share, k_c) + (K - k_c))
         for k_c in range(K + 1)),
        Fraction(0))
    return n_c, exact


def monte_carlo_average(scheme: str, *, K: int, N: int, M: Fraction | int,
                        gamma: float, t: int = 2, N_r: int = 0,
                        samples: int = 100_000, seed: int = 0) -> float:
    """Sampling cross-check of ``average_rate`` for the per-class schemes."""
    from .placement import group_library

    model = zipf(N, gamma)
    grouping = group_library(N, Fraction(M), t, N_r, K)
    rng = random.Random(seed)
    cum: list[float] = []
    acc = 0.0
    for p in model.probabilities:
        acc += p
        cum.append(acc)
    high_cut = grouping.n_high
    zero_cut = N - N_r
    rates: dict[tuple[int, int, int], float] = {}
    total = 0.0
    for _ in range(samples):
        kh = kl = kr = 0
        for _u in range(K):
            x = rng.random()
            f = _bisect(cum, x)
            if f < high_cut:
                kh += 1
            elif f < zero_cut:
                kl += 1
            else:
                kr += 1
        k = (kh, kl, kr)
        if k not in rates:
            rates[k] = float(class_rate(scheme, K, t, k))
        total += rates[k]
    return total / samples


def _bisect(cum: list[float], x: float) -> int:
    lo, hi = 0, len(cum) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] >= x:
            hi = mid
        else:
            lo = mid + 1
    return lo
