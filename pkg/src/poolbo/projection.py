"""Learned projection feature map: linear layer, dropout, ELU.

The map z = ELU(Dropout(W x + b)) reshapes frozen embeddings before kernel
evaluation. Dropout (inverted, applied to the pre-activation) is active only
in training mode; evaluation-mode output is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class ProjectionMap:
    """Affine map plus ELU, with a training-time dropout rate.

    W has shape (m, d): m output features from d-dimensional embeddings.
    """

    W: np.ndarray
    b: np.ndarray
    dropout_rate: float = 0.0

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"W {self.W.shape} and b {self.b.shape} are inconsistent")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise ValueError("projection parameters must be finite")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "ProjectionMap":
        return ProjectionMap(self.W.copy(), self.b.copy(), self.dropout_rate)

    def to_dict(self) -> dict:
        return {"W": self.W.tolist(), "b": self.b.tolist(),
                "dropout_rate": self.dropout_rate}

    @classmethod
    def from_dict(cls, d: dict) -> "ProjectionMap":
        return cls(np.asarray(d["W"]), np.asarray(d["b"]),
                   d.get("dropout_rate", 0.0))


def init_projection(d: int, m: int = 64, seed: int = 0,
                    dropout_rate: float = 0.0) -> ProjectionMap:
    """Xavier-uniform weights on [-sqrt(6/(d+m)), +sqrt(6/(d+m))], zero bias."""
    if d < 1 or m < 1:
        raise ValueError("both dimensions must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1A17]))
    bound = math.sqrt(6.0 / (d + m))
    W = rng.uniform(-bound, bound, size=(m, d))
    return ProjectionMap(W=W, b=np.zeros(m), dropout_rate=dropout_rate)


def elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, 1.0, np.exp(np.minimum(x, 0.0)))


def project(proj: ProjectionMap, X, training: bool = False,
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Apply the feature map to rows of X.

    Training mode draws an inverted-dropout mask for the pre-activation from
    ``rng``; evaluation mode is deterministic and mask-free.
    """
    Z, _ = project_with_cache(proj, X, training=training, rng=rng)
    return Z


def project_with_cache(proj: ProjectionMap, X, training: bool = False,
                       rng: np.random.Generator | None = None):
    """Forward pass returning (Z, cache) for backpropagation.

    cache = (X, pre_activation_after_dropout, mask_over_keep_prob) where the
    mask term is None when dropout was not applied.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != proj.in_dim:
        raise ValueError(f"expected (n, {proj.in_dim}) inputs, got {X.shape}")
    A = X @ proj.W.T + proj.b
    scaled_mask = None
    if training and proj.dropout_rate > 0.0:
        if rng is None:
            raise ValueError("training-mode dropout needs an rng")
        keep = 1.0 - proj.dropout_rate
        scaled_mask = (rng.random(A.shape) < keep) / keep
        A = A * scaled_mask
    return elu(A), (X, A, scaled_mask)


def project_backward(proj: ProjectionMap, grad_Z, cache):
    """Gradients of a scalar loss w.r.t. W and b given dLoss/dZ."""
    X, A, scaled_mask = cache
    grad_A = np.asarray(grad_Z) * elu_grad(A)
    if scaled_mask is not None:
        grad_A = grad_A * scaled_mask
    return grad_A.T @ X, grad_A.sum(axis=0)
