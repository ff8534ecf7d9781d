"""Exact Gaussian process with a Matern-5/2 kernel and constant mean.

Hyperparameters are kept as unconstrained logs so gradient steps preserve
positivity. The marginal log-likelihood, its analytic gradients (including
the pullback onto feature matrices for deep surrogates) and the closed-form
posterior all go through one Cholesky factorization of the noisy kernel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import kernels
from .errors import SingularKernelError
from .pools import Standardizer
from .projection import ProjectionMap, project

# Escalating diagonal boost, relative to the signal variance.
JITTER_LADDER = (0.0, 1e-8, 1e-6, 1e-4)

_LOG_2PI = math.log(2.0 * math.pi)

# Box for the unconstrained coordinates [log l, log sv, log nv, c]. Keeps
# gradient training out of degenerate regions (underflowed noise, dead
# lengthscales) the way mainstream GP stacks constrain raw parameters.
PARAM_LOWER = np.array([math.log(1e-3), math.log(1e-6), math.log(1e-6), -1e3])
PARAM_UPPER = np.array([math.log(1e3), math.log(1e3), math.log(1e2), 1e3])


def clip_params(vec: np.ndarray) -> np.ndarray:
    return np.clip(vec, PARAM_LOWER, PARAM_UPPER)


@dataclass
class GPHyperparams:
    """Kernel and likelihood parameters in unconstrained (log) form."""

    log_lengthscale: float = 0.0
    log_signal_var: float = 0.0
    log_noise_var: float = math.log(1e-4)
    mean_const: float = 0.0

    @classmethod
    def from_values(cls, lengthscale=1.0, signal_var=1.0, noise_var=1e-4,
                    mean_const=0.0) -> "GPHyperparams":
        if lengthscale <= 0 or signal_var <= 0 or noise_var <= 0:
            raise ValueError("lengthscale, signal_var and noise_var must be positive")
        return cls(math.log(lengthscale), math.log(signal_var),
                   math.log(noise_var), float(mean_const))

    @property
    def lengthscale(self) -> float:
        return math.exp(self.log_lengthscale)

    @property
    def signal_var(self) -> float:
        return math.exp(self.log_signal_var)

    @property
    def noise_var(self) -> float:
        return math.exp(self.log_noise_var)

    def as_array(self) -> np.ndarray:
        """Unconstrained coordinates [log l, log sv, log nv, c]."""
        return np.array([self.log_lengthscale, self.log_signal_var,
                         self.log_noise_var, self.mean_const])

    @classmethod
    def from_array(cls, a) -> "GPHyperparams":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def to_dict(self) -> dict:
        return {"lengthscale": self.lengthscale, "signal_var": self.signal_var,
                "noise_var": self.noise_var, "mean_const": self.mean_const}

    @classmethod
    def from_dict(cls, d: dict) -> "GPHyperparams":
        return cls.from_values(d["lengthscale"], d["signal_var"],
                               d["noise_var"], d["mean_const"])


@dataclass
class KernelMatrix:
    """Noise-free kernel matrix plus the factorization of its noisy form."""

    K: np.ndarray        # symmetric, diagonal == signal_var
    jitter: float        # diagonal boost actually added (absolute)
    chol: np.ndarray     # lower L with K + (noise_var + jitter) I = L L^T


def matern52(a, b, lengthscale, signal_var) -> float:
    """Scalar Matern-5/2 covariance between two vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    d2 = float(np.sum((a - b) ** 2))
    return float(kernels.matern52(np.array([[d2]]), lengthscale, signal_var)[0, 0])


def _factorize(K, noise_var, signal_var):
    """Cholesky of K + (noise_var + jitter) I, escalating jitter until it works."""
    n = K.shape[0]
    diag = np.arange(n)
    noisy = K.copy()
    for level in JITTER_LADDER:
        jitter = level * signal_var
        noisy[diag, diag] = K[diag, diag] + noise_var + jitter
        try:
            L = np.linalg.cholesky(noisy)
            return L, jitter
        except np.linalg.LinAlgError:
            continue
    cond = float(np.linalg.cond(noisy))
    raise SingularKernelError(
        f"kernel matrix not factorizable at max jitter "
        f"{JITTER_LADDER[-1] * signal_var:g} (condition estimate {cond:.3e})",
        condition_estimate=cond)


def kernel_matrix(X, params: GPHyperparams) -> KernelMatrix:
    """Matern-5/2 kernel matrix over rows of X, factorized with the noise term."""
    X = np.asarray(X, dtype=np.float64)
    D2 = kernels.pairwise_sq_dists(X)
    K = kernels.matern52(D2, params.lengthscale, params.signal_var)
    L, jitter = _factorize(K, params.noise_var, params.signal_var)
    return KernelMatrix(K=K, jitter=jitter, chol=L)


def mll(X, y, params: GPHyperparams) -> float:
    """Marginal log-likelihood -1/2 (r^T K^-1 r + log|K| + n log 2pi), r = y - c."""
    value, _ = _mll_core(np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64),
                         params, want_grad=False)
    return value


def mll_grad(X, y, params: GPHyperparams) -> np.ndarray:
    """Gradient of the marginal log-likelihood in [log l, log sv, log nv, c]."""
    _, grad = _mll_core(np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64),
                        params, want_grad=True)
    return grad


def mll_and_grad(X, y, params: GPHyperparams) -> tuple[float, np.ndarray]:
    return _mll_core(np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64),
                     params, want_grad=True)


def _mll_core(Z, y, params, want_grad, want_feature_grad=False):
    n = Z.shape[0]
    lengthscale, signal_var = params.lengthscale, params.signal_var
    noise_var = params.noise_var

    D2 = kernels.pairwise_sq_dists(Z)
    if want_grad:
        K, RC = kernels.matern52_k_rc(D2, lengthscale, signal_var)
    else:
        K = kernels.matern52(D2, lengthscale, signal_var)
    L, jitter = _factorize(K, noise_var, signal_var)

    resid = y - params.mean_const
    alpha = cho_solve((L, True), resid, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    value = -0.5 * (float(resid @ alpha) + logdet + n * _LOG_2PI)
    if not want_grad:
        return value, None

    Kinv = cho_solve((L, True), np.eye(n), check_finite=False)
    G = 0.5 * (np.outer(alpha, alpha) - Kinv)

    # dK/dlog(l) = -D2 * RC; dK/dlog(sv) = K + jitter I (jitter scales with sv);
    # dK/dlog(nv) = nv I; dc enters through the residual.
    g_logl = float(np.sum(G * (-D2 * RC)))
    g_logsv = float(np.sum(G * K)) + jitter * float(np.trace(G))
    g_lognv = noise_var * float(np.trace(G))
    g_c = float(np.sum(alpha))
    grad = np.array([g_logl, g_logsv, g_lognv, g_c])
    if not want_feature_grad:
        return value, grad

    # Pullback onto the feature matrix: dL/dZ_i = 2 sum_j B_ij (Z_i - Z_j)
    # with B = G .* RC, RC the radial derivative coefficient (1/r) dk/dr.
    B = G * RC
    grad_Z = 2.0 * (B.sum(axis=1)[:, None] * Z - B @ Z)
    return value, (grad, grad_Z)


def mll_and_grad_features(Z, y, params: GPHyperparams):
    """Marginal log-likelihood with gradients for both theta and the features.

    Returns (value, grad_theta[4], grad_Z[n, m]); the feature gradient is the
    exact pullback of the likelihood through the kernel's pairwise distances.
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    value, (grad, grad_Z) = _mll_core(Z, y, params, want_grad=True, want_feature_grad=True)
    return value, grad, grad_Z


@dataclass
class PosteriorGaussian:
    """Marginal posterior mean and variance at a batch of query points."""

    mean: np.ndarray
    variance: np.ndarray

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)


@dataclass
class FittedSurrogate:
    """Trained surrogate: hyperparameters, optional feature map, cached solves.

    Immutable after fitting; posterior queries are safe to run concurrently.
    Targets are modeled on the standardizer's scale; posterior queries can
    report either scale.
    """

    kind: str                          # "fixed" | "deep"
    params: GPHyperparams
    projection: Optional[ProjectionMap]
    X_train: np.ndarray                # raw inputs as given to the fitter
    Z_train: np.ndarray                # features the kernel actually saw
    y_train: np.ndarray                # standardized targets
    standardizer: Standardizer
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    best_mll: float
    train_ids: Optional[list[str]] = None
    trace: list = field(default_factory=list)
    feature_trajectory: list = field(default_factory=list)

    def features_of(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.kind == "deep":
            return project(self.projection, X, training=False)
        return X

    def posterior(self, Xq, include_noise: bool = False,
                  raw_scale: bool = True) -> PosteriorGaussian:
        """Closed-form GP posterior at query rows.

        Latent variance is clamped at zero; observation noise is added on
        request. ``raw_scale`` maps the prediction back through the target
        standardizer.
        """
        Zq = self.features_of(Xq)
        D2q = kernels.cross_sq_dists(Zq, self.Z_train)
        Kq = kernels.matern52(D2q, self.params.lengthscale, self.params.signal_var)
        mean = self.params.mean_const + Kq @ self.alpha
        V = solve_triangular(self.chol, Kq.T, lower=True, check_finite=False)
        var = self.params.signal_var - np.einsum("ij,ij->j", V, V)
        np.clip(var, 0.0, None, out=var)
        if include_noise:
            var = var + self.params.noise_var
        if raw_scale:
            mean = self.standardizer.inverse(mean)
            var = var * self.standardizer.y_std ** 2
        return PosteriorGaussian(mean=mean, variance=var)

    def train_mll(self) -> float:
        """Marginal log-likelihood of the training set at the fitted parameters."""
        return self.best_mll

    def to_json(self) -> str:
        doc = {
            "schema": 1,
            "kind": self.kind,
            "hyperparams": self.params.to_dict(),
            "standardizer": self.standardizer.to_dict(),
            "train_ids": self.train_ids,
            "jitter": self.jitter,
            "best_mll": self.best_mll,
        }
        if self.projection is not None:
            doc["projection"] = self.projection.to_dict()
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, X_train, y_train_raw) -> "FittedSurrogate":
        """Rebuild a surrogate from its JSON form plus the training data.

        X_train/y_train_raw must be the rows referenced by train_ids, in the
        same order (raw objective scale).
        """
        doc = json.loads(text)
        params = GPHyperparams.from_dict(doc["hyperparams"])
        scaler = Standardizer.from_dict(doc["standardizer"])
        proj = ProjectionMap.from_dict(doc["projection"]) if "projection" in doc else None
        kind = doc["kind"]
        X_train = np.asarray(X_train, dtype=np.float64)
        y_std = scaler.transform(np.asarray(y_train_raw, dtype=np.float64))
        Z = project(proj, X_train, training=False) if kind == "deep" else X_train
        km = kernel_matrix(Z, params)
        alpha = cho_solve((km.chol, True), y_std - params.mean_const, check_finite=False)
        return cls(kind=kind, params=params, projection=proj, X_train=X_train,
                   Z_train=Z, y_train=y_std, standardizer=scaler, chol=km.chol,
                   alpha=alpha, jitter=km.jitter, best_mll=doc.get("best_mll", math.nan),
                   train_ids=doc.get("train_ids"))


def build_surrogate(kind, params, X, y_std, scaler, projection=None,
                    train_ids=None, best_mll=None, trace=None,
                    feature_trajectory=None) -> FittedSurrogate:
    """Assemble a FittedSurrogate, computing features and cached solves."""
    X = np.asarray(X, dtype=np.float64)
    y_std = np.asarray(y_std, dtype=np.float64)
    Z = project(projection, X, training=False) if kind == "deep" else X
    km = kernel_matrix(Z, params)
    alpha = cho_solve((km.chol, True), y_std - params.mean_const, check_finite=False)
    if best_mll is None:
        best_mll = mll(Z, y_std, params)
    return FittedSurrogate(kind=kind, params=params, projection=projection,
                           X_train=X, Z_train=Z, y_train=y_std, standardizer=scaler,
                           chol=km.chol, alpha=alpha, jitter=km.jitter,
                           best_mll=best_mll, train_ids=train_ids,
                           trace=trace or [], feature_trajectory=feature_trajectory or [])


def fit_fixed(X, y, init: Optional[GPHyperparams] = None, restarts: int = 4,
              max_evals: int = 200, seed: int = 0, standardize: bool = True,
              train_ids: Optional[list[str]] = None) -> FittedSurrogate:
    """Maximize the marginal likelihood over theta with fixed features.

    Monotone gradient ascent with a backtracking step size, restarted from
    the given initialization plus log-space perturbations; the best restart
    is kept. Never returns parameters with a lower likelihood than the
    initialization.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("fitting needs at least 2 observations")
    if standardize:
        from .pools import standardize_targets
        y_std, scaler = standardize_targets(y)
    else:
        y_std, scaler = y, Standardizer.identity()
    init = init or GPHyperparams()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))

    best_x, best_f = None, -np.inf
    trace = []
    for r in range(max(1, restarts)):
        x0 = init.as_array()
        if r > 0:
            x0 = x0 + rng.normal(scale=[1.0, 1.0, 1.0, 0.3])
        x, f, evals = _ascend(lambda a: _theta_objective(Z=X, y=y_std, a=a),
                              x0, max_evals)
        trace.append({"restart": r, "mll": f, "evals": evals})
        if f > best_f:
            best_x, best_f = x, f
    if best_x is None:
        raise SingularKernelError("all restarts failed to factorize the kernel")
    params = GPHyperparams.from_array(best_x)
    return build_surrogate("fixed", params, X, y_std, scaler,
                           train_ids=train_ids, best_mll=best_f, trace=trace)


def _theta_objective(Z, y, a):
    params = GPHyperparams.from_array(a)
    try:
        return _mll_core(Z, y, params, want_grad=True)
    except SingularKernelError:
        return -np.inf, None


def _ascend(f_and_g, x0, max_evals):
    """Backtracking gradient ascent; accepts only strict improvements."""
    f, g = f_and_g(x0)
    evals = 1
    if not np.isfinite(f):
        return None, -np.inf, evals
    x = x0  # baseline stays unclipped so the init contract is airtight
    step = 0.5
    while evals < max_evals and step > 1e-13:
        gnorm = np.linalg.norm(g)
        if gnorm < 1e-12:
            break
        cand = clip_params(x + step * g / max(gnorm, 1.0))
        fc, gc = f_and_g(cand)
        evals += 1
        if np.isfinite(fc) and fc > f:
            x, f, g = cand, fc, gc
            step *= 1.6
        else:
            step *= 0.5
    return x, f, evals
