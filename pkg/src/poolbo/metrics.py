"""Evaluation metrics and representation diagnostics.

Everything here is a pure function over immutable inputs: discovery
coverage of the pool's best candidates, fit quality (plain and
top-weighted R^2), predictive calibration (NLPD), the lengthscale to
pairwise-distance smoothness ratio, and between/within class distance
statistics of a feature space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import DataError
from .pools import CandidatePool

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class CoverageSpec:
    """Global top-quantile reference set, fixed by the true labels."""

    quantile: float
    reference_set: frozenset[str]

    @classmethod
    def from_pool(cls, pool: CandidatePool, quantile: float = 0.05) -> "CoverageSpec":
        if not pool.labeled:
            raise DataError("coverage needs a labeled pool")
        if not 0.0 < quantile <= 1.0:
            raise ValueError("quantile must lie in (0, 1]")
        k = math.ceil(quantile * pool.n)
        order = np.argsort(-pool.y, kind="stable")[:k]
        return cls(quantile=quantile,
                   reference_set=frozenset(pool.ids[i] for i in order))

    def coverage(self, evaluated_ids: Iterable[str]) -> float:
        hits = self.reference_set.intersection(evaluated_ids)
        return len(hits) / len(self.reference_set)


def topk_coverage(evaluated_ids: Iterable[str], pool: CandidatePool,
                  quantile: float = 0.05) -> float:
    """Fraction of the pool's global top-quantile set among evaluated ids."""
    return CoverageSpec.from_pool(pool, quantile).coverage(evaluated_ids)


def r2(y_true, y_pred) -> float:
    """Coefficient of determination; NaN sentinel for zero-variance targets."""
    return weighted_r2(y_true, y_pred, top_quantile=1.0, weight_ratio=1.0)


def weighted_r2(y_true, y_pred, top_quantile: float = 0.05,
                weight_ratio: float = 3.0) -> float:
    """R^2 with the global top-quantile points upweighted (default 3:1).

    Weights enter both the residual and the total sum, with the weighted
    mean in the denominator. weight_ratio=1 reduces exactly to plain R^2.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or y_true.size < 2:
        raise ValueError("y_true and y_pred must be equal-length vectors, n >= 2")
    w = np.ones_like(y_true)
    if weight_ratio != 1.0 and top_quantile < 1.0:
        k = math.ceil(top_quantile * y_true.size)
        top = np.argsort(-y_true, kind="stable")[:k]
        w[top] = weight_ratio
    wmean = float(w @ y_true) / float(w.sum())
    ss_tot = float(w @ (y_true - wmean) ** 2)
    if ss_tot == 0.0:
        return math.nan
    ss_res = float(w @ (y_true - y_pred) ** 2)
    return 1.0 - ss_res / ss_tot


def nlpd(y_true, post) -> float:
    """Mean negative log predictive density under the Gaussian posterior.

    Expects a noise-inclusive posterior on the raw objective scale.
    Variances below the floor are clamped (see nlpd_details for the flag).
    """
    return nlpd_details(y_true, post)["value"]


def nlpd_details(y_true, post) -> dict:
    y_true = np.asarray(y_true, dtype=np.float64)
    mean = np.asarray(post.mean, dtype=np.float64)
    var = np.asarray(post.variance, dtype=np.float64)
    floored = bool(np.any(var < VARIANCE_FLOOR))
    var = np.maximum(var, VARIANCE_FLOOR)
    per_point = 0.5 * (np.log(2.0 * math.pi * var) + (y_true - mean) ** 2 / var)
    return {"value": float(np.mean(per_point)), "variance_floored": floored}


def mean_pairwise_distance(Z, exclude_zero_pairs: bool = False,
                           max_exact_n: int = 2000,
                           sample_pairs: int = 2_000_000,
                           seed: int = 0) -> float:
    """Mean L2 distance over unordered row pairs.

    Exact up to max_exact_n rows; beyond that, a seeded uniform sample of
    pairs is used.
    """
    Z = np.asarray(Z, dtype=np.float64)
    n = Z.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points")
    if n <= max_exact_n:
        dists = pdist(Z)
    else:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD157]))
        i = rng.integers(0, n, size=sample_pairs)
        j = rng.integers(0, n - 1, size=sample_pairs)
        j = np.where(j >= i, j + 1, j)  # uniform over ordered pairs with i != j
        dists = np.sqrt(np.sum((Z[i] - Z[j]) ** 2, axis=1))
    if exclude_zero_pairs:
        dists = dists[dists > 0.0]
        if dists.size == 0:
            raise ValueError("all pairwise distances are zero")
    return float(np.mean(dists))


def smoothness_ratio(fit, pool: CandidatePool, exclude_zero_pairs: bool = False,
                     seed: int = 0) -> float:
    """Learned lengthscale over the mean pairwise distance of the features.

    The distances use raw embeddings for fixed surrogates and the learned
    features for deep ones, matching what the kernel actually saw.
    """
    Z = fit.features_of(pool.X)
    mean_dist = mean_pairwise_distance(Z, exclude_zero_pairs=exclude_zero_pairs,
                                       seed=seed)
    return fit.params.lengthscale / mean_dist


@dataclass
class ClassPairDistances:
    """L2 distance multisets between/within output classes.

    A family is None when its class has too few members. Thresholds are
    strict quantile cuts, so constant targets yield a single class.
    """

    high_high: Optional[np.ndarray]
    high_low: Optional[np.ndarray]
    low_low: Optional[np.ndarray]
    n_high: int
    n_low: int
    summary: dict = field(default_factory=dict)


def class_pair_distances(Z, y, hi_quantile: float = 0.10,
                         lo_quantile: float = 0.10) -> ClassPairDistances:
    """Partition points by output class and collect pairwise distances."""
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if hi_quantile + lo_quantile > 1.0:
        raise ValueError("hi_quantile + lo_quantile must not exceed 1")
    hi_mask = y > np.quantile(y, 1.0 - hi_quantile)
    lo_mask = y < np.quantile(y, lo_quantile)
    Zhi, Zlo = Z[hi_mask], Z[lo_mask]

    high_high = pdist(Zhi) if Zhi.shape[0] >= 2 else None
    low_low = pdist(Zlo) if Zlo.shape[0] >= 2 else None
    if Zhi.shape[0] >= 1 and Zlo.shape[0] >= 1:
        high_low = cdist(Zhi, Zlo).ravel()
    else:
        high_low = None

    summary = {}
    for name, arr in (("high_high", high_high), ("high_low", high_low),
                      ("low_low", low_low)):
        if arr is not None and arr.size:
            summary[name] = {"mean": float(np.mean(arr)),
                             "median": float(np.median(arr)),
                             "count": int(arr.size)}
        else:
            summary[name] = None
    return ClassPairDistances(high_high=high_high, high_low=high_low,
                              low_low=low_low, n_high=int(Zhi.shape[0]),
                              n_low=int(Zlo.shape[0]), summary=summary)


def separation_stats(Z, y, hi_quantile: float = 0.10,
                     lo_quantile: float = 0.10) -> dict:
    """Between-class over within-class mean distance ratio.

    Returns +inf when the classes collapse to points (zero within-class
    spread) and None when a required family is absent.
    """
    pairs = class_pair_distances(Z, y, hi_quantile, lo_quantile)
    within = [a for a in (pairs.high_high, pairs.low_low) if a is not None]
    if pairs.high_low is None or not within:
        score = None
    else:
        within_all = np.concatenate(within)
        between_mean = float(np.mean(pairs.high_low))
        within_mean = float(np.mean(within_all))
        score = math.inf if within_mean == 0.0 else between_mean / within_mean
    return {"separation": score, "n_high": pairs.n_high, "n_low": pairs.n_low,
            "families": pairs.summary}


def histogram_csv_rows(values: np.ndarray, bins: int = 30) -> list[tuple]:
    """(bin_start, bin_end, count) rows for external plotting."""
    counts, edges = np.histogram(values, bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i]))
            for i in range(len(counts))]


@dataclass
class AggregateStat:
    mean: float
    std: float
    n: int

    @property
    def single_seed(self) -> bool:
        return self.n == 1


@dataclass
class MetricReport:
    """Per-seed metric values plus their mean +/- sample std aggregate."""

    values: dict[str, list[float]]
    stats: dict[str, AggregateStat]


def aggregate(per_seed_reports: list[dict[str, float]]) -> MetricReport:
    """Mean and sample standard deviation (std 0 by convention for n=1)."""
    if not per_seed_reports:
        raise ValueError("need at least one per-seed report")
    names: list[str] = []
    for report in per_seed_reports:
        for key in report:
            if key not in names:
                names.append(key)
    values = {name: [float(r[name]) for r in per_seed_reports if name in r]
              for name in names}
    stats = {}
    for name, vals in values.items():
        arr = np.asarray(vals)
        std = float(np.std(arr, ddof=1)) if arr.size >= 2 else 0.0
        stats[name] = AggregateStat(mean=float(np.mean(arr)), std=std, n=arr.size)
    return MetricReport(values=values, stats=stats)
