"""Wilson intervals, McNemar tests, pass@k and Spearman correlation."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import stats

EXACT_MCNEMAR_BELOW = 25


def wilson_ci(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, as fractions in [0, 1]."""
    if n <= 0:
        raise ValueError("wilson_ci needs n >= 1")
    if not 0 <= successes <= n:
        raise ValueError("successes must lie in [0, n]")
    z = stats.norm.ppf(0.5 + confidence / 2)
    p = successes / n
    z2 = z * z
    denom = 1 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return float(lo), float(hi)


def mcnemar_p(b: int, c: int) -> float:
    """Two-sided McNemar p-value from the discordant counts.

    Exact binomial when ``b + c < 25``, continuity-corrected chi-square otherwise.
    """
    if b < 0 or c < 0:
        raise ValueError("discordant counts must be non-negative")
    n = b + c
    if n == 0:
        return 1.0
    if n < EXACT_MCNEMAR_BELOW:
        return float(stats.binomtest(b, n, 0.5).pvalue)
    chi2 = (abs(b - c) - 1) ** 2 / n
    return float(stats.chi2.sf(chi2, 1))


def mcnemar_from_pairs(a_correct: Sequence[bool], b_correct: Sequence[bool]) -> tuple[int, int, float]:
    if len(a_correct) != len(b_correct):
        raise ValueError("paired outcome lists differ in length")
    b = sum(1 for x, y in zip(a_correct, b_correct) if x and not y)
    c = sum(1 for x, y in zip(a_correct, b_correct) if y and not x)
    return b, c, mcnemar_p(b, c)


def pass_at_k(counts: Sequence[tuple[int, int]], k: int) -> float:
    """Unbiased pass@k averaged over questions; ``counts`` holds (correct, samples) pairs."""
    if not counts:
        raise ValueError("no questions")
    total = 0.0
    for c, n in counts:
        if not 0 <= c <= n:
            raise ValueError(f"bad count pair ({c}, {n})")
        if not 1 <= k <= n:
            raise ValueError(f"k={k} outside [1, {n}]")
        total += 1.0 - math.comb(n - c, k) / math.comb(n, k)
    return total / len(counts)


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of average ranks."""
    if len(xs) != len(ys):
        raise ValueError("length mismatch")
    if len(xs) < 2:
        raise ValueError("need at least two observations")
    rx = stats.rankdata(xs)
    ry = stats.rankdata(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry)))
    if denom == 0:
        return float("nan")
    return float(np.dot(rx, ry)) / denom
