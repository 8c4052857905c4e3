"""Interval estimates and goodness-of-fit used by the Monte Carlo checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np
from scipy import stats as sps

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

Z99 = NormalDist().inv_cdf(0.995)


@dataclass(frozen=True)
class Interval:
    estimate: float
    lo: float
    hi: float


def wilson(successes: int, trials: int, z: float = Z99) -> Interval:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return Interval(math.nan, 0.0, 1.0)
    p = successes / trials
    z2 = z * z
    den = 1 + z2 / trials
    center = (p + z2 / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / den
    # rounding can push an endpoint past p when k is 0 or n
    return Interval(p, max(0.0, min(p, center - half)), min(1.0, max(p, center + half)))


def chi_square_pmf(samples: Sequence[int], pmf: Sequence[float], min_expected: float = 5.0):
    """Pearson test of integer samples against a pmf on ``0..len(pmf)-1``.

    Adjacent bins are pooled from the outside in until each expects at least
    ``min_expected`` observations. Returns ``(statistic, dof, p_value)``.
    """
    samples = np.asarray(samples, dtype=np.int64)
    pmf = np.asarray(pmf, dtype=np.float64)
    total = len(samples)
    obs = np.bincount(samples, minlength=len(pmf)).astype(np.float64)
    if len(obs) > len(pmf):
        raise ValueError("samples fall outside the support of the pmf")
    exp = pmf * total
    bins_o, bins_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
            acc_o = acc_e = 0.0
    if bins_e:
        bins_o[-1] += acc_o
        bins_e[-1] += acc_e
    else:
        bins_o, bins_e = [acc_o], [acc_e]
    bins_o = np.array(bins_o)
    bins_e = np.array(bins_e)
    bins_e *= bins_o.sum() / bins_e.sum()
    dof = len(bins_o) - 1
    if dof < 1:
        return 0.0, 0, 1.0
    stat, p = sps.chisquare(bins_o, bins_e)
    return float(stat), dof, float(p)


def binomial_pmf(n: int, p: float) -> np.ndarray:
    return sps.binom.pmf(np.arange(n + 1), n, p)
