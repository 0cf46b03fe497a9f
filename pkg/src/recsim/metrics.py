"""
Popularity, accuracy and stability measures.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import rankdata

from recsim.errors import UndefinedCorrelationError
from recsim.teacher import TeacherModel, expected_item_popularity


def gini(values: ArrayLike) -> float:
    """
    Gini coefficient of a non-negative vector, using the sorted-rank form

    .. math::
       G = \\frac{\\sum_i (2i - m - 1) x_{(i)}}{m \\sum_i x_i}

    which equals the mean absolute pairwise difference over twice the mean.
    An all-zero vector has coefficient 0.
    """
    xs = np.sort(np.asarray(values, dtype=np.float64))
    if xs.size == 0:
        raise ValueError("gini of empty vector")
    if xs[0] < 0:
        raise ValueError("gini is undefined for negative values")
    total = xs.sum()
    if total == 0:
        return 0.0
    m = xs.size
    ranks = 2.0 * np.arange(1, m + 1) - m - 1
    return float(max(ranks @ xs / (m * total), 0.0))


def mean_popularity(values: ArrayLike) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("mean of empty vector")
    return float(values.mean())


def pearson(x: ArrayLike, y: ArrayLike) -> float:
    "Product-moment correlation; raises if either input is constant."
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D vectors of equal length")
    if x.size < 2:
        raise ValueError("pearson needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation undefined for zero-variance input")
    r = (dx @ dy) / math.sqrt(sxx * syy)
    return float(min(max(r, -1.0), 1.0))


def spearman(x: ArrayLike, y: ArrayLike) -> float:
    "Rank correlation (Pearson of average ranks)."
    return pearson(rankdata(x), rankdata(y))


_CORRELATIONS = {"pearson": pearson, "spearman": spearman}


def ground_truth_correlation(result, teacher: TeacherModel, t: int, method: str = "pearson") -> float:
    """
    Correlation between item popularity at timestep ``t`` of ``result`` and
    the teacher's expected popularity under full sampling.
    """
    return _CORRELATIONS[method](result.popularity_at(t), expected_item_popularity(teacher))


def inter_realization_correlation(results, t: int, method: str = "pearson") -> float:
    """
    Mean correlation of popularity at ``t`` over all unordered pairs of
    realizations.  Pairs with an undefined correlation are left out.
    """
    results = list(results)
    if len(results) < 2:
        raise ValueError("need at least two realizations")
    pops = [r.popularity_at(t) for r in results]
    if len({len(p) for p in pops}) != 1:
        raise ValueError("realizations disagree on item count")
    corrs = pairwise_correlations(pops, method)
    if not corrs:
        raise UndefinedCorrelationError("every realization pair has an undefined correlation")
    return float(np.mean(corrs))


def pairwise_correlations(vectors, method: str = "pearson") -> list[float]:
    fn = _CORRELATIONS[method]
    out = []
    for a, b in itertools.combinations(vectors, 2):
        try:
            out.append(fn(a, b))
        except UndefinedCorrelationError:
            pass
    return out


def popularity_difference_zscore(series_a: ArrayLike, series_b: ArrayLike) -> float:
    """
    Significance of the difference between two sets of per-realization time
    series (shape ``(realizations, timesteps)``).

    The statistic is the mean over timesteps of the difference between the
    realization-averaged series, divided by its standard error.  The error is
    estimated from the spread of each realization's time-averaged value, with
    the two sets treated as independent samples.  Positive means ``a > b``.
    Works for any per-timestep quantity, not only popularity.
    """
    a = np.atleast_2d(np.asarray(series_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(series_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError("series have different timestep grids")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("need at least two realizations per side to estimate variance")
    ma = np.nanmean(a, axis=1)
    mb = np.nanmean(b, axis=1)
    diff = ma.mean() - mb.mean()
    se = math.sqrt(ma.var(ddof=1) / len(ma) + mb.var(ddof=1) / len(mb))
    if se == 0:
        if diff == 0:
            return 0.0
        return math.copysign(math.inf, diff)
    return float(diff / se)
