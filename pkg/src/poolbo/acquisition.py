"""Expected Improvement over a finite candidate pool, plus a random baseline.

Maximization convention throughout. Scoring happens on the surrogate's
standardized scale: the incumbent best is mapped through the surrogate's
standardizer so the comparison is consistent with the posterior.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import PoolExhaustedError
from .gp import FittedSurrogate, PosteriorGaussian
from .pools import CandidatePool

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

TIE_TOLERANCE = 1e-12


@dataclass
class AcquisitionScore:
    """Score of one candidate: EI value plus the posterior it came from."""

    index: int
    candidate_id: str
    score: float
    posterior_mean: float
    posterior_std: float


def expected_improvement(post: PosteriorGaussian, f_best: float) -> np.ndarray:
    """Closed-form EI: (mu - f) Phi(z) + s phi(z), z = (mu - f) / s.

    Degenerate s = 0 collapses to max(mu - f, 0). Always nonnegative.
    """
    mean = np.asarray(post.mean, dtype=np.float64)
    std = np.sqrt(np.asarray(post.variance, dtype=np.float64))
    delta = mean - f_best
    ei = np.maximum(delta, 0.0)
    positive = std > 0.0
    if np.any(positive):
        z = delta[positive] / std[positive]
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
        ei = ei.copy()
        ei[positive] = delta[positive] * ndtr(z) + std[positive] * pdf
    return np.maximum(ei, 0.0)


def score_pool(fit: FittedSurrogate, remaining: CandidatePool,
               observed_best: float) -> list[AcquisitionScore]:
    """EI for every remaining candidate; observed_best is on the raw scale."""
    post = fit.posterior(remaining.X, include_noise=False, raw_scale=False)
    f_best = float(fit.standardizer.transform(np.array([observed_best]))[0])
    scores = expected_improvement(post, f_best)
    raw = fit.standardizer
    return [AcquisitionScore(index=i, candidate_id=cid, score=float(scores[i]),
                             posterior_mean=float(raw.inverse(post.mean[i:i + 1])[0]),
                             posterior_std=float(np.sqrt(post.variance[i])) * raw.y_std)
            for i, cid in enumerate(remaining.ids)]


def select_next(fit: FittedSurrogate, remaining: CandidatePool,
                observed_best: float, rng: np.random.Generator,
                tie_tol: float = TIE_TOLERANCE) -> AcquisitionScore:
    """Argmax-EI candidate; ties within tie_tol broken uniformly via rng."""
    if remaining.n == 0:
        raise PoolExhaustedError("no candidates remain")
    scored = score_pool(fit, remaining, observed_best)
    values = np.array([s.score for s in scored])
    tied = np.flatnonzero(values >= values.max() - tie_tol)
    pick = int(tied[rng.integers(0, tied.size)]) if tied.size > 1 else int(tied[0])
    return scored[pick]


def random_select(remaining: CandidatePool, rng: np.random.Generator) -> str:
    """Uniform choice over the remaining candidates."""
    if remaining.n == 0:
        raise PoolExhaustedError("no candidates remain")
    return remaining.ids[int(rng.integers(0, remaining.n))]


def scores_to_csv(scored: list[AcquisitionScore], path) -> None:
    """Export acquisition scores for external analysis."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "score", "posterior_mean", "posterior_std"])
        for s in scored:
            writer.writerow([s.candidate_id, repr(s.score),
                             repr(s.posterior_mean), repr(s.posterior_std)])
