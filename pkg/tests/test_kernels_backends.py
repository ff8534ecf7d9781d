"""Agreement between the compiled kernel core and the NumPy fallback."""

import numpy as np
import pytest

from poolbo import kernels

native = kernels.native_backend()
needs_native = pytest.mark.skipif(native is None,
                                  reason="compiled extension not built")


@needs_native
@pytest.mark.parametrize("seed", range(5))
def test_pairwise_sq_dists_agree(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((23, 7))
    a = native.pairwise_sq_dists(X)
    b = kernels.numpy_backend.pairwise_sq_dists(X)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    assert np.array_equal(np.diag(a), np.zeros(23))
    assert np.array_equal(a, a.T)


@needs_native
def test_cross_sq_dists_agree():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((11, 5))
    B = rng.standard_normal((17, 5))
    np.testing.assert_allclose(native.cross_sq_dists(A, B),
                               kernels.numpy_backend.cross_sq_dists(A, B),
                               rtol=1e-12, atol=1e-12)


@needs_native
@pytest.mark.parametrize("lengthscale,signal_var", [(0.3, 0.5), (1.0, 1.0), (4.2, 2.5)])
def test_matern_values_agree(lengthscale, signal_var):
    rng = np.random.default_rng(2)
    D2 = kernels.numpy_backend.pairwise_sq_dists(rng.standard_normal((19, 4)))
    np.testing.assert_allclose(native.matern52(D2, lengthscale, signal_var),
                               kernels.numpy_backend.matern52(D2, lengthscale, signal_var),
                               rtol=1e-13, atol=0)
    Kn, RCn = native.matern52_k_rc(D2, lengthscale, signal_var)
    Kf, RCf = kernels.numpy_backend.matern52_k_rc(D2, lengthscale, signal_var)
    np.testing.assert_allclose(Kn, Kf, rtol=1e-13, atol=0)
    np.testing.assert_allclose(RCn, RCf, rtol=1e-13, atol=0)


def test_cross_dimension_mismatch_raises():
    with pytest.raises(ValueError):
        kernels.cross_sq_dists(np.zeros((2, 3)), np.zeros((2, 4)))


def test_env_var_forces_fallback_at_import():
    import os
    import subprocess
    import sys
    out = subprocess.run(
        [sys.executable, "-c", "from poolbo.kernels import BACKEND; print(BACKEND)"],
        env={**os.environ, "POOLBO_NO_NATIVE": "1"},
        capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_radial_coefficient_limit_at_zero():
    # (1/r) dk/dr tends to -5 sv / (3 l^2) as r -> 0; both backends must hit it.
    for backend in filter(None, (native, kernels.numpy_backend)):
        _, RC = backend.matern52_k_rc(np.array([[0.0]]), 2.0, 3.0)
        np.testing.assert_allclose(RC[0, 0], -5.0 * 3.0 / (3.0 * 4.0), rtol=1e-14)
