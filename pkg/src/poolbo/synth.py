"""Synthetic benchmark pools: desk-scale ground truth for tests.

Three generators cover the behaviors the optimizer is tested against:
draws from a known GP (hyperparameter recovery), planted clusters whose
objective tracks cluster membership (structure discovery), and objectives
living on a small coordinate subspace (feature selection). Every pool is a
pure function of its spec and can be regenerated bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .pools import CandidatePool

MAX_FIXTURE_N = 500
MAX_FIXTURE_D = 64

_GENERATORS = ("gp_draw", "planted_clusters", "linear_subspace")


@dataclass(frozen=True)
class SyntheticSpec:
    """Deterministic recipe for one benchmark pool."""

    n: int
    d: int
    generator: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be >= 1")
        if self.n > MAX_FIXTURE_N or self.d > MAX_FIXTURE_D:
            raise ValueError(f"fixtures are capped at n<={MAX_FIXTURE_N}, d<={MAX_FIXTURE_D}")
        if self.generator not in _GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "d": self.d, "generator": self.generator,
                           "params": self.params, "seed": self.seed}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        doc = json.loads(text)
        return cls(n=doc["n"], d=doc["d"], generator=doc["generator"],
                   params=doc.get("params", {}), seed=doc.get("seed", 0))


def generate(spec: SyntheticSpec) -> CandidatePool:
    """Build the pool described by the spec (same spec, same bits)."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0xBE7C]))
    maker = {"gp_draw": _gp_draw, "planted_clusters": _planted_clusters,
             "linear_subspace": _linear_subspace}[spec.generator]
    X, y = maker(spec, rng)
    # Round through float32 so saving to the binary pool format is lossless.
    X = X.astype(np.float32).astype(np.float64)
    ids = [f"c{i:05d}" for i in range(spec.n)]
    meta = {"generator": spec.generator, "spec": spec.to_json()}
    return CandidatePool(ids=ids, X=X, y=y, meta=meta)


def _gp_draw(spec: SyntheticSpec, rng):
    """Objective sampled from a Matern-5/2 GP over random embeddings."""
    p = {"lengthscale": 1.5, "signal_var": 1.0, "noise_var": 1e-6, **spec.params}
    if p["lengthscale"] <= 0 or p["signal_var"] <= 0 or p["noise_var"] < 0:
        raise ValueError("gp_draw needs positive lengthscale/signal_var and "
                         "nonnegative noise_var")
    X = rng.standard_normal((spec.n, spec.d))
    D2 = kernels.pairwise_sq_dists(X)
    K = kernels.matern52(D2, p["lengthscale"], p["signal_var"])
    K[np.arange(spec.n), np.arange(spec.n)] += 1e-10 * p["signal_var"]
    L = np.linalg.cholesky(K)
    f = L @ rng.standard_normal(spec.n)
    y = f + np.sqrt(p["noise_var"]) * rng.standard_normal(spec.n)
    return X, y


def _planted_clusters(spec: SyntheticSpec, rng):
    """Gaussian clusters whose mean objective steps up by `gap` per cluster.

    Optional structure knobs: `within_signal` adds a smooth objective
    component along a per-cluster direction (so the global optimum sits in
    a discoverable corner of the top cluster), and `nuisance_dims` appends
    coordinates of pure noise at `nuisance_scale`, diluting raw distances
    while leaving the informative subspace intact.
    """
    p = {"k": 3, "gap": 10.0, "noise": 1.0, "center_sep": 3.0, "spread": 1.0,
         "within_signal": 0.0, "nuisance_dims": 0, "nuisance_scale": 1.0,
         **spec.params}
    k = int(p["k"])
    nuisance = int(p["nuisance_dims"])
    d_info = spec.d - nuisance
    if k < 2 or k > spec.n:
        raise ValueError("planted_clusters needs 2 <= k <= n")
    if p["gap"] <= 0 or p["noise"] < 0 or p["center_sep"] <= 0 or p["spread"] <= 0:
        raise ValueError("gap, center_sep, spread must be positive; noise >= 0")
    if not 0 <= nuisance < spec.d:
        raise ValueError("nuisance_dims must lie in [0, d)")
    if p["within_signal"] < 0 or p["nuisance_scale"] <= 0:
        raise ValueError("within_signal must be >= 0, nuisance_scale > 0")

    # Balanced membership, shuffled; centers with ~center_sep expected gaps.
    labels = rng.permutation(np.arange(spec.n) % k)
    centers = rng.standard_normal((k, d_info)) * (p["center_sep"] / np.sqrt(2 * d_info))
    eta = rng.standard_normal((spec.n, d_info))
    X_info = centers[labels] + p["spread"] / np.sqrt(d_info) * eta

    y = p["gap"] * labels.astype(np.float64)
    if p["within_signal"] > 0:
        directions = rng.standard_normal((k, d_info))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        # eta @ u is standard normal per point: a unit-variance smooth
        # component of the objective, linear in the embedding offset.
        y = y + p["within_signal"] * np.einsum("ij,ij->i", eta, directions[labels])
    y = y + p["noise"] * rng.standard_normal(spec.n)

    if nuisance:
        X_nuis = p["nuisance_scale"] * rng.standard_normal((spec.n, nuisance))
        X = np.concatenate([X_info, X_nuis], axis=1)
    else:
        X = X_info
    return X, y


def _linear_subspace(spec: SyntheticSpec, rng):
    """Objective depending on a random coordinate subspace plus noise."""
    p = {"active_dims": 2, "noise": 0.1, **spec.params}
    a = int(p["active_dims"])
    if not 1 <= a <= spec.d:
        raise ValueError("active_dims must lie in [1, d]")
    if p["noise"] < 0:
        raise ValueError("noise must be nonnegative")
    X = rng.standard_normal((spec.n, spec.d))
    active = np.sort(rng.choice(spec.d, size=a, replace=False))
    w = rng.standard_normal(a)
    w /= np.linalg.norm(w)
    y = X[:, active] @ w + p["noise"] * rng.standard_normal(spec.n)
    return X, y
