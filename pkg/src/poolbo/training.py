"""Joint training of the projection map and GP hyperparameters.

Full-batch maximization of the marginal likelihood with two parameter
groups on separate learning rates (GP hyperparameters fast, projection
slow), decoupled weight decay on the projection only, global gradient-norm
clipping, and a stepped learning-rate decay. The returned surrogate is the
best iterate over the whole trajectory, judged by evaluation-mode
likelihood, never the last one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SingularKernelError
from .gp import (FittedSurrogate, GPHyperparams, build_surrogate, clip_params,
                 mll, mll_and_grad_features)
from .pools import Standardizer, standardize_targets
from .projection import ProjectionMap, project, project_backward, project_with_cache


@dataclass
class TrainConfig:
    """Knobs of the joint trainer; defaults follow the tuned-once recipe."""

    lr_gp: float = 2e-1
    lr_feat: float = 2e-3
    weight_decay: float = 1e-3
    clip_norm: float = 1.0
    lr_decay: float = 0.95
    decay_every: int = 10
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if min(self.lr_gp, self.clip_norm, self.lr_decay) <= 0:
            raise ValueError("lr_gp, clip_norm and lr_decay must be positive")
        if self.lr_feat < 0:  # 0 freezes the feature map entirely
            raise ValueError("lr_feat must be nonnegative")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if self.decay_every < 1:
            raise ValueError("decay_every must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


def _default_init(X, projection, quantile: float = 0.5) -> GPHyperparams:
    """Distance-quantile lengthscale so training starts in a responsive region.

    A lengthscale far below the initial feature scale leaves the kernel
    numerically diagonal: the likelihood surface is flat there and gradient
    training stalls before the feature map can adapt.
    """
    from scipy.spatial.distance import pdist

    Z = project(projection, X, training=False) if projection is not None else X
    dists = pdist(Z)
    dists = dists[dists > 0]
    lengthscale = float(np.quantile(dists, quantile)) if dists.size else 1.0
    return GPHyperparams.from_values(lengthscale=max(lengthscale, 1e-3))


class _Adam:
    """Decoupled-weight-decay adaptive moment ascent for one tensor."""

    def __init__(self, shape, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def step(self, param, grad, lr, weight_decay=0.0):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1 ** self.t)
        vhat = self.v / (1 - self.beta2 ** self.t)
        param += lr * mhat / (np.sqrt(vhat) + self.eps)
        if weight_decay:
            param -= lr * weight_decay * param
        return param


def joint_fit(X, y, projection: Optional[ProjectionMap] = None,
              init: Optional[GPHyperparams] = None,
              cfg: Optional[TrainConfig] = None, standardize: bool = True,
              train_ids: Optional[list[str]] = None,
              trace_features_every: Optional[int] = None) -> FittedSurrogate:
    """Train (theta, phi) jointly by marginal likelihood ascent.

    With ``projection=None`` the same optimizer trains theta alone on the
    raw features, which makes the frozen-feature reduction exactly testable.
    A factorization failure skips that step (the kernel path has already
    escalated jitter); five consecutive failures abort.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("fitting needs at least 2 observations")
    cfg = cfg or TrainConfig()
    if init is None:
        init = _default_init(X, projection)
    if standardize:
        y_std, scaler = standardize_targets(y)
    else:
        y_std, scaler = y, Standardizer.identity()

    theta = init.as_array().copy()
    proj = projection.copy() if projection is not None else None
    kind = "deep" if proj is not None else "fixed"
    # lr_feat == 0 freezes the feature map: the projection drops out of the
    # parameter set (no dropout, no share of the clip norm), reducing the
    # trainer to theta-only ascent on the projected features.
    train_features = proj is not None and cfg.lr_feat > 0
    frozen_Z = project(proj, X, training=False) if (proj is not None
                                                    and not train_features) else None
    drop_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xD20]))

    def eval_mll(theta_vec, pmap):
        Z = project(pmap, X, training=False) if pmap is not None else X
        return mll(Z, y_std, GPHyperparams.from_array(theta_vec))

    adam_theta = _Adam(theta.shape)
    adam_W = _Adam(proj.W.shape) if train_features else None
    adam_b = _Adam(proj.b.shape) if train_features else None

    stochastic = train_features and proj.dropout_rate > 0.0
    best_val = -np.inf
    best_theta, best_proj = theta.copy(), proj.copy() if proj else None
    trace: list[dict] = []
    feature_trajectory: list[tuple[int, ProjectionMap]] = []
    consecutive_failures = 0

    for t in range(cfg.epochs):
        lr_scale = cfg.lr_decay ** (t // cfg.decay_every)
        if trace_features_every and proj is not None and t % trace_features_every == 0:
            feature_trajectory.append((t, proj.copy()))

        params = GPHyperparams.from_array(theta)
        if train_features:
            Z, cache = project_with_cache(proj, X, training=True, rng=drop_rng)
        else:
            Z, cache = (frozen_Z if frozen_Z is not None else X), None
        try:
            value_train, g_theta, g_Z = mll_and_grad_features(Z, y_std, params)
        except SingularKernelError:
            consecutive_failures += 1
            trace.append({"epoch": t, "skipped": True})
            if consecutive_failures >= 5:
                raise
            continue
        consecutive_failures = 0

        value_eval = value_train if not stochastic else eval_mll(theta, proj)
        if value_eval > best_val:
            best_val = value_eval
            best_theta = theta.copy()
            best_proj = proj.copy() if proj else None

        if train_features:
            g_W, g_b = project_backward(proj, g_Z, cache)
            total_sq = float(g_theta @ g_theta) + float(np.sum(g_W * g_W)) + float(g_b @ g_b)
        else:
            g_W = g_b = None
            total_sq = float(g_theta @ g_theta)
        total_norm = np.sqrt(total_sq)
        scale = min(1.0, cfg.clip_norm / total_norm) if total_norm > 0 else 1.0

        theta = clip_params(adam_theta.step(theta, g_theta * scale,
                                            cfg.lr_gp * lr_scale))
        if train_features:
            proj.W = adam_W.step(proj.W, g_W * scale, cfg.lr_feat * lr_scale,
                                 cfg.weight_decay)
            proj.b = adam_b.step(proj.b, g_b * scale, cfg.lr_feat * lr_scale,
                                 cfg.weight_decay)
        trace.append({"epoch": t, "mll": value_eval, "grad_norm": total_norm * scale,
                      "lr_gp": cfg.lr_gp * lr_scale, "lr_feat": cfg.lr_feat * lr_scale})

    # The post-update endpoint is part of the trajectory too.
    final_val = eval_mll(theta, proj)
    if final_val > best_val:
        best_val = final_val
        best_theta, best_proj = theta.copy(), proj.copy() if proj else None
    if trace_features_every and proj is not None:
        feature_trajectory.append((cfg.epochs, proj.copy()))

    best_params = GPHyperparams.from_array(best_theta)
    return build_surrogate(kind, best_params, X, y_std, scaler,
                           projection=best_proj, train_ids=train_ids,
                           best_mll=best_val, trace=trace,
                           feature_trajectory=feature_trajectory)


def contrastive_trace(fit: FittedSurrogate, X, y, hi_quantile: float = 0.10,
                      lo_quantile: float = 0.10) -> list[dict]:
    """Separation statistics of the learned features across training.

    For every retained feature-map snapshot, partitions the projected points
    into output classes and reports the mean between-class over mean
    within-class distance ratio. Requires a fit made with
    ``trace_features_every``.
    """
    from .metrics import separation_stats

    if not fit.feature_trajectory:
        raise ValueError("fit retained no feature trajectory; "
                         "pass trace_features_every to joint_fit")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    out = []
    for epoch, proj in fit.feature_trajectory:
        Z = project(proj, X, training=False)
        stats = separation_stats(Z, y, hi_quantile, lo_quantile)
        stats["epoch"] = epoch
        out.append(stats)
    return out
