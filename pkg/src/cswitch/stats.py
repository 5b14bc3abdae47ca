"""Self-contained statistical kernel: rank tests, KDE, summaries.

Both Wilcoxon tests switch between an exact small-sample mode and a
normal approximation.  Exact p-values are computed over integer rank sums
(midranks are doubled so ties stay on an integer grid), which keeps the
null distribution free of floating-point noise; the approximation applies
tie and continuity corrections.  Two-sided p-values are twice the smaller
tail, clamped to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# largest pooled (rank-sum) / nonzero-pair (signed-rank) size handled exactly
RANK_SUM_EXACT_LIMIT = 20
SIGNED_RANK_EXACT_LIMIT = 25


@dataclass(frozen=True)
class TestResult:
    """Outcome of a rank test."""

    statistic: float
    z: float
    p_value: float
    method: str          # "rank_sum" | "signed_rank"
    mode: str            # "exact" | "normal_approx"
    n1: int | None = None
    n2: int | None = None
    n: int | None = None
    zeros_dropped: int = 0
    effect_size_r: float | None = None
    degenerate: bool = False


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    sd: float | None
    se: float | None


def _doubled_midranks(values: Sequence[float]) -> list[int]:
    """Ranks of ``values`` times two, so tied (mid)ranks are exact integers."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    doubled = [0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # positions i..j are 0-based; 1-based midrank = (i+1 + j+1)/2
        d = i + j + 2
        for k in range(i, j + 1):
            doubled[order[k]] = d
        i = j + 1
    return doubled


def _normal_sf2(z: float) -> float:
    """Two-sided tail probability for a standard normal statistic."""
    return math.erfc(abs(z) / math.sqrt(2.0))


def _two_sided(lo: int, hi: int, total: int) -> float:
    return min(1.0, 2.0 * (min(lo, hi) / total))


def _exact_subset_counts(doubled: Sequence[int], size: int) -> list[int]:
    """Count ``size``-subsets of ``doubled`` by sum (index = doubled sum)."""
    top = sum(doubled)
    dp = [[0] * (top + 1) for _ in range(size + 1)]
    dp[0][0] = 1
    for d in doubled:
        for k in range(size, 0, -1):
            row, prev = dp[k], dp[k - 1]
            for s in range(top, d - 1, -1):
                if prev[s - d]:
                    row[s] += prev[s - d]
    return dp[size]


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float],
                      method: str = "auto") -> TestResult:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) test.

    Exact mode enumerates the permutation null conditional on the observed
    tie pattern whenever ``len(a) + len(b) <= 20`` (or ``method="exact"``);
    otherwise a tie-corrected normal approximation with continuity
    correction is used.  The reported statistic is the Mann-Whitney U of
    sample ``a``.
    """
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    pooled = list(a) + list(b)
    N = n1 + n2
    doubled = _doubled_midranks(pooled)
    w2 = sum(doubled[:n1])                      # doubled rank sum of a
    u = w2 / 2.0 - n1 * (n1 + 1) / 2.0          # Mann-Whitney U of a

    # tie-corrected variance of the rank sum; zero means every value ties
    _, counts = np.unique(np.asarray(pooled, dtype=float), return_counts=True)
    tie_term = float(np.sum(counts.astype(np.int64) ** 3 - counts))
    var_u = n1 * n2 / 12.0 * ((N + 1) - tie_term / (N * (N - 1))) if N > 1 else 0.0
    degenerate = var_u <= 0.0
    mu = n1 * n2 / 2.0
    if degenerate:
        z = 0.0
    else:
        shift = -0.5 if u > mu else (0.5 if u < mu else 0.0)
        z = (u - mu + shift) / math.sqrt(var_u)

    exact = method == "exact" or (method == "auto" and N <= RANK_SUM_EXACT_LIMIT)
    if degenerate:
        p, mode = 1.0, "exact" if exact else "normal_approx"
    elif exact:
        counts_by_sum = _exact_subset_counts(doubled, n1)
        total = math.comb(N, n1)
        lo = sum(counts_by_sum[: w2 + 1])
        hi = sum(counts_by_sum[w2:])
        p, mode = _two_sided(lo, hi, total), "exact"
    else:
        p, mode = _normal_sf2(z), "normal_approx"
    p = max(p, math.ulp(0.0))
    r = abs(z) / math.sqrt(N)
    return TestResult(statistic=u, z=z, p_value=p, method="rank_sum", mode=mode,
                      n1=n1, n2=n2, n=N, effect_size_r=r, degenerate=degenerate)


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float] | None = None,
                         method: str = "auto") -> TestResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    With ``y`` given, tests the differences ``x - y``; otherwise ``x`` is
    taken to be the differences.  Zero differences are dropped (tallied in
    ``zeros_dropped``).  Exact mode enumerates sign flips while the number
    of nonzero differences is <= 25.  ``effect_size_r`` is |z|/sqrt(N) with
    N the number of supplied pairs, zeros included.
    """
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    if y is not None:
        if len(x) != len(y):
            raise ValueError("paired samples must have equal length")
        diffs = [float(xi) - float(yi) for xi, yi in zip(x, y)]
    else:
        diffs = [float(d) for d in x]
    if not diffs:
        raise ValueError("no pairs supplied")
    n_pairs = len(diffs)
    nonzero = [d for d in diffs if d != 0.0]
    zeros = n_pairs - len(nonzero)
    n = len(nonzero)
    if n == 0:
        return TestResult(statistic=0.0, z=0.0, p_value=1.0, method="signed_rank",
                          mode="exact", n=n_pairs, zeros_dropped=zeros,
                          effect_size_r=0.0, degenerate=True)

    doubled = _doubled_midranks([abs(d) for d in nonzero])
    w2 = sum(d2 for d2, d in zip(doubled, nonzero) if d > 0)
    w_plus = w2 / 2.0

    # exact sign-flip moments: W+ = sum r_i * Bernoulli(1/2)
    mean2 = sum(doubled) / 2.0
    var2 = sum(d2 * d2 for d2 in doubled) / 4.0
    if var2 <= 0.0:
        z = 0.0
    else:
        shift = -0.5 if w2 > mean2 else (0.5 if w2 < mean2 else 0.0)
        # doubled units throughout: sd is sqrt(var2), offsets are in w2 scale
        z = (w2 - mean2 + 2.0 * shift) / math.sqrt(var2)

    exact = method == "exact" or (method == "auto" and n <= SIGNED_RANK_EXACT_LIMIT)
    if exact:
        counts = _sign_flip_counts(doubled)
        total = 1 << n
        lo = sum(counts[: w2 + 1])
        hi = sum(counts[w2:])
        p, mode = _two_sided(lo, hi, total), "exact"
    else:
        p, mode = _normal_sf2(z), "normal_approx"
    p = max(p, math.ulp(0.0))
    r = abs(z) / math.sqrt(n_pairs)
    return TestResult(statistic=w_plus, z=z, p_value=p, method="signed_rank",
                      mode=mode, n=n_pairs, zeros_dropped=zeros,
                      effect_size_r=r, degenerate=False)


def _sign_flip_counts(doubled: Sequence[int]) -> list[int]:
    top = sum(doubled)
    counts = [0] * (top + 1)
    counts[0] = 1
    for d in doubled:
        for s in range(top, d - 1, -1):
            if counts[s - d]:
                counts[s] += counts[s - d]
    return counts


def kde_gaussian(values: Sequence[float], grid: Sequence[float] | None = None,
                 bandwidth: float | None = None,
                 grid_points: int = 256) -> tuple[np.ndarray, np.ndarray, float]:
    """Gaussian kernel density estimate.

    Bandwidth defaults to Silverman's rule, 0.9 * min(sd, IQR/1.34) *
    n^(-1/5); when the IQR is zero but the sample still varies, the sd
    alone is used.  Zero-variance input cannot be smoothed automatically.

    Returns ``(grid, density, bandwidth)``.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two observations")
    if bandwidth is None:
        sd = float(np.std(x, ddof=1))
        if sd == 0.0:
            raise ValueError(
                "zero-variance input: pass an explicit bandwidth to kde_gaussian")
        q1, q3 = np.percentile(x, [25.0, 75.0])
        iqr = float(q3 - q1)
        spread = min(sd, iqr / 1.34) if iqr > 0.0 else sd
        bandwidth = 0.9 * spread * x.size ** (-0.2)
    if bandwidth <= 0.0:
        raise ValueError("bandwidth must be positive")
    if grid is None:
        g = np.linspace(x.min() - 3.0 * bandwidth, x.max() + 3.0 * bandwidth,
                        grid_points)
    else:
        g = np.asarray(grid, dtype=float)
    zscores = (g[:, None] - x[None, :]) / bandwidth
    dens = np.exp(-0.5 * zscores ** 2).sum(axis=1)
    dens /= x.size * bandwidth * math.sqrt(2.0 * math.pi)
    return g, dens, float(bandwidth)


def summarize(values: Sequence[float]) -> Summary:
    """Mean, sample sd, and standard error; sd/se are None when n < 2."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("no values to summarize")
    mean = float(np.mean(x))
    if x.size < 2:
        return Summary(n=1, mean=mean, sd=None, se=None)
    sd = float(np.std(x, ddof=1))
    return Summary(n=int(x.size), mean=mean, sd=sd, se=sd / math.sqrt(x.size))
