"""Nonparametric statistics kernel: rank tests, effect sizes, correlation.

All procedures are rank-based and implemented directly so results are
reproducible bit-for-bit from the documented formulas; the only numerics
pulled in from elsewhere are the complementary error function (stdlib) and
a regularized upper incomplete gamma implemented below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AllZeroDifferences, DegenerateTies, ZeroVariance

WILCOXON_EXACT_MAX_N = 15  # exact enumeration is 2^n; cheap up to here

CLIFF_NEGLIGIBLE = 0.147
CLIFF_SMALL = 0.33
CLIFF_MEDIUM = 0.474


@dataclass(frozen=True, slots=True)
class TestResult:
    statistic: float
    p_value: float
    method: str


@dataclass(frozen=True, slots=True)
class DunnPair:
    """One pairwise comparison from Dunn's post-hoc test (Bonferroni-adjusted)."""

    i: int
    j: int
    z: float
    p: float
    p_adjusted: float


# ---------------------------------------------------------------------------
# special functions

def normal_sf(z: float) -> float:
    """Standard normal survival function via the complementary error function."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by series, for x < a + 1."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(500):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by continued fraction, x >= a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))

def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)

def chi2_sf(x: float, df: int) -> float:
    """Chi-square survival function."""
    return gamma_q(df / 2.0, x / 2.0)


# ---------------------------------------------------------------------------
# ranks

def ranks_avg_ties(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values receive the mean of their rank span."""
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        raise ValueError("cannot rank an empty sequence")
    sorter = np.argsort(a, kind="mergesort")
    inv = np.empty(a.size, dtype=np.intp)
    inv[sorter] = np.arange(a.size)
    srt = a[sorter]
    distinct = np.r_[True, srt[1:] != srt[:-1]]
    dense = distinct.cumsum()[inv]
    # boundaries of each tie run in the sorted order
    edges = np.r_[np.nonzero(distinct)[0], a.size]
    return 0.5 * (edges[dense] + edges[dense - 1] + 1)


def _tie_term(pooled: np.ndarray) -> float:
    """Sum of t^3 - t over tie group sizes t."""
    _, counts = np.unique(pooled, return_counts=True)
    c = counts.astype(float)
    return float(np.sum(c ** 3 - c))


# ---------------------------------------------------------------------------
# omnibus and post-hoc

def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    """Kruskal-Wallis H test across two or more groups.

    H is tie-corrected by 1 - sum(t^3 - t)/(N^3 - N); the p-value comes from
    the chi-square survival function with k - 1 degrees of freedom.
    """
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if any(a.size == 0 for a in arrays):
        raise ValueError("all groups must be non-empty")
    pooled = np.concatenate(arrays)
    n_total = pooled.size
    if n_total < 3:
        raise ValueError("need at least 3 values in total")
    ranks = ranks_avg_ties(pooled)
    h = 0.0
    offset = 0
    for a in arrays:
        r_mean = float(ranks[offset:offset + a.size].mean())
        h += a.size * r_mean * r_mean
        offset += a.size
    h = 12.0 / (n_total * (n_total + 1)) * h - 3.0 * (n_total + 1)
    correction = 1.0 - _tie_term(pooled) / (n_total ** 3 - n_total)
    if correction == 0.0:
        raise DegenerateTies("all pooled values identical")
    h /= correction
    p = chi2_sf(h, len(arrays) - 1)
    return TestResult(statistic=h, p_value=min(1.0, max(0.0, p)), method="kruskal_wallis")


def dunn_posthoc(
    groups: Sequence[Sequence[float]],
    alpha: float = 0.05,
    correction: str = "bonferroni",
) -> list[DunnPair]:
    """Dunn's pairwise z-tests on pooled average ranks, Bonferroni-adjusted."""
    if correction.lower() != "bonferroni":
        raise ValueError(f"unsupported correction {correction!r}")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2 or any(a.size == 0 for a in arrays):
        raise ValueError("need >= 2 non-empty groups")
    pooled = np.concatenate(arrays)
    n_total = pooled.size
    tie_term = _tie_term(pooled)
    if n_total ** 3 - n_total == tie_term:
        raise DegenerateTies("all pooled values identical")
    ranks = ranks_avg_ties(pooled)
    means = []
    offset = 0
    for a in arrays:
        means.append(float(ranks[offset:offset + a.size].mean()))
        offset += a.size
    var_base = n_total * (n_total + 1) / 12.0 - tie_term / (12.0 * (n_total - 1))
    k = len(arrays)
    n_pairs = k * (k - 1) // 2
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            se = math.sqrt(var_base * (1.0 / arrays[i].size + 1.0 / arrays[j].size))
            z = (means[i] - means[j]) / se
            p = 2.0 * normal_sf(abs(z))
            out.append(DunnPair(i=i, j=j, z=z, p=p, p_adjusted=min(1.0, p * n_pairs)))
    return out


# ---------------------------------------------------------------------------
# effect size

def cliff_magnitude(delta: float) -> str:
    """Magnitude label for a Cliff's delta value."""
    d = abs(delta)
    if d <= CLIFF_NEGLIGIBLE:
        return "negligible"
    if d <= CLIFF_SMALL:
        return "small"
    if d <= CLIFF_MEDIUM:
        return "medium"
    return "large"


def cliffs_delta(d1: Sequence[float], d2: Sequence[float]) -> tuple[float, str]:
    """Cliff's delta: (#(x > y) - #(x < y)) / (|d1| * |d2|) over all pairs.

    Counted exactly in O((n + m) log(n + m)) by bisecting a sorted copy of d2,
    so large samples are fine.
    """
    x = np.asarray(d1, dtype=float)
    y = np.asarray(d2, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    y_sorted = np.sort(y)
    greater = int(np.searchsorted(y_sorted, x, side="left").sum())
    less = int((y.size - np.searchsorted(y_sorted, x, side="right")).sum())
    delta = (greater - less) / (x.size * y.size)
    return delta, cliff_magnitude(delta)


# ---------------------------------------------------------------------------
# paired test

def wilcoxon_signed_rank(differences: Sequence[float]) -> TestResult:
    """Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped. With n <= 15 remaining, the p-value is an
    exact enumeration over all sign assignments; beyond that a normal
    approximation with tie and continuity corrections is used. The statistic
    is W = min(W+, W-).
    """
    d = np.asarray(differences, dtype=float)
    if d.size < 5:
        raise ValueError("need at least 5 paired differences")
    d = d[d != 0.0]
    if d.size == 0:
        raise AllZeroDifferences("every paired difference is zero")
    ranks = ranks_avg_ties(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    total = float(ranks.sum())
    w = min(w_plus, total - w_plus)
    n = int(d.size)
    if n <= WILCOXON_EXACT_MAX_N:
        sums = np.zeros(1)
        for r in ranks:
            sums = np.concatenate([sums, sums + r])
        eps = 1e-9
        p = (np.count_nonzero(sums <= w + eps) + np.count_nonzero(sums >= total - w - eps)) / sums.size
        return TestResult(statistic=w, p_value=min(1.0, p), method="wilcoxon_exact")
    mean = n * (n + 1) / 4.0
    tie_term = _tie_term(np.abs(d))
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    se = math.sqrt(variance)
    shift = 0.5 * math.copysign(1.0, w - mean) if w != mean else 0.0
    z = (w - mean - shift) / se
    p = 2.0 * normal_sf(abs(z))
    return TestResult(statistic=w, p_value=min(1.0, p), method="wilcoxon_normal")


# ---------------------------------------------------------------------------
# correlation

SPEARMAN_CUTS = (0.19, 0.39, 0.59, 0.79)
SPEARMAN_LABELS = ("very weak", "weak", "moderate", "strong", "very strong")


def spearman_strength(rho: float) -> str:
    """Strength label for a Spearman coefficient."""
    r = abs(rho)
    for cut, label in zip(SPEARMAN_CUTS, SPEARMAN_LABELS):
        if r <= cut:
            return label
    return SPEARMAN_LABELS[-1]


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, str]:
    """Spearman rank correlation: Pearson correlation of average-tie ranks."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.size != ya.size:
        raise ValueError("x and y must have equal length")
    if xa.size < 3:
        raise ValueError("need at least 3 observations")
    rx = ranks_avg_ties(xa)
    ry = ranks_avg_ties(ya)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("constant ranks; correlation undefined")
    rho = float((dx * dy).sum()) / (sx * sy)
    return rho, spearman_strength(rho)
