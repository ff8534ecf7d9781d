"""NumPy/SciPy implementations of the hot kernel primitives.

Mirrors the signatures of the compiled module so either backend can be
selected at import. All functions take and return float64 arrays.
"""

import numpy as np
from scipy.spatial.distance import cdist

_SQRT5 = np.sqrt(5.0)

BACKEND = "numpy"


def pairwise_sq_dists(X):
    """Squared Euclidean distances between all rows of X (exact zero diagonal)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    D2 = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(D2, 0.0)
    return D2


def cross_sq_dists(A, B):
    """Squared Euclidean distances between rows of A and rows of B."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    return cdist(A, B, "sqeuclidean")


def matern52(D2, lengthscale, signal_var):
    """Matern-5/2 covariance from squared distances.

    k(r) = signal_var * (1 + s + s^2/3) * exp(-s) with s = sqrt(5) * r / lengthscale.
    """
    s = _SQRT5 * np.sqrt(D2) / lengthscale
    return signal_var * (1.0 + s + s * s / 3.0) * np.exp(-s)


def matern52_k_rc(D2, lengthscale, signal_var):
    """Covariance and its radial derivative coefficient, in one pass.

    Returns (K, RC) where RC = (1/r) dk/dr = -(5 sv / (3 l^2)) (1 + s) exp(-s),
    which is finite and smooth at r = 0. Downstream identities:
    dK/dlog(l) = -D2 * RC and dK/dlog(sv) = K.
    """
    s = _SQRT5 * np.sqrt(D2) / lengthscale
    e = np.exp(-s)
    K = signal_var * (1.0 + s + s * s / 3.0) * e
    RC = -(5.0 * signal_var / (3.0 * lengthscale * lengthscale)) * (1.0 + s) * e
    return K, RC
