"""Projection feature map: forward pass, initialization, dropout."""

import math

import numpy as np
import pytest

from poolbo.projection import (ProjectionMap, elu, init_projection, project,
                               project_backward, project_with_cache)


class TestForward:
    def test_zero_parameters_give_zero_output(self):
        proj = ProjectionMap(W=np.zeros((4, 3)), b=np.zeros(4))
        Z = project(proj, np.random.default_rng(0).standard_normal((6, 3)))
        np.testing.assert_array_equal(Z, np.zeros((6, 4)))

    def test_elu_lower_asymptote(self):
        proj = ProjectionMap(W=np.ones((1, 1)), b=np.zeros(1))
        Z = project(proj, np.array([[-1e6]]))
        np.testing.assert_allclose(Z, [[-1.0]], atol=1e-12)

    def test_dropout_zero_training_equals_eval(self):
        proj = init_projection(5, 3, seed=1, dropout_rate=0.0)
        X = np.random.default_rng(2).standard_normal((8, 5))
        rng = np.random.default_rng(3)
        np.testing.assert_array_equal(project(proj, X, training=True, rng=rng),
                                      project(proj, X, training=False))

    def test_eval_mode_bitwise_deterministic(self):
        proj = init_projection(6, 4, seed=0, dropout_rate=0.5)
        X = np.random.default_rng(1).standard_normal((10, 6))
        assert np.array_equal(project(proj, X), project(proj, X))

    def test_dimension_mismatch(self):
        proj = init_projection(5, 3, seed=0)
        with pytest.raises(ValueError):
            project(proj, np.zeros((2, 4)))

    def test_training_dropout_needs_rng(self):
        proj = init_projection(3, 2, seed=0, dropout_rate=0.5)
        with pytest.raises(ValueError, match="rng"):
            project(proj, np.zeros((2, 3)), training=True)

    def test_inverted_dropout_preserves_expectation(self):
        proj = ProjectionMap(W=np.eye(1) * 1.0, b=np.zeros(1), dropout_rate=0.3)
        X = np.full((200_000, 1), 2.0)
        rng = np.random.default_rng(7)
        Z = project(proj, X, training=True, rng=rng)
        # Pre-activation is positive, so ELU is identity on kept units.
        assert abs(Z.mean() - 2.0) < 0.02


class TestInit:
    def test_xavier_bound(self):
        proj = init_projection(768, 64, seed=0)
        bound = math.sqrt(6.0 / (768 + 64))
        assert np.max(np.abs(proj.W)) <= bound
        assert abs(bound - 0.0849) < 5e-4
        np.testing.assert_array_equal(proj.b, np.zeros(64))

    def test_deterministic_under_seed(self):
        a = init_projection(10, 4, seed=42)
        b = init_projection(10, 4, seed=42)
        assert np.array_equal(a.W, b.W)
        assert not np.array_equal(a.W, init_projection(10, 4, seed=43).W)

    def test_default_width_is_64(self):
        assert init_projection(16, seed=0).out_dim == 64

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            init_projection(0, 4, seed=0)


class TestBackward:
    @pytest.mark.parametrize("dropout", [0.0, 0.4])
    def test_matches_finite_differences(self, dropout):
        rng = np.random.default_rng(4)
        proj = init_projection(5, 3, seed=9, dropout_rate=dropout)
        X = rng.standard_normal((7, 5))
        G = rng.standard_normal((7, 3))  # arbitrary upstream gradient

        mask_rng = np.random.default_rng(11)
        Z, cache = project_with_cache(proj, X, training=dropout > 0, rng=mask_rng)
        gW, gb = project_backward(proj, G, cache)

        _, _, scaled_mask = cache

        def loss(W, b):
            A = X @ W.T + b
            if scaled_mask is not None:
                A = A * scaled_mask
            return float(np.sum(G * elu(A)))

        h = 1e-6
        for idx in [(0, 0), (1, 3), (2, 4)]:
            Wp, Wm = proj.W.copy(), proj.W.copy()
            Wp[idx] += h
            Wm[idx] -= h
            fd = (loss(Wp, proj.b) - loss(Wm, proj.b)) / (2 * h)
            assert abs(gW[idx] - fd) < 1e-6 * max(1.0, abs(fd))
        bp, bm = proj.b.copy(), proj.b.copy()
        bp[1] += h
        bm[1] -= h
        fd = (loss(proj.W, bp) - loss(proj.W, bm)) / (2 * h)
        assert abs(gb[1] - fd) < 1e-6 * max(1.0, abs(fd))


def test_serialization_round_trip():
    proj = init_projection(4, 3, seed=5, dropout_rate=0.2)
    clone = ProjectionMap.from_dict(proj.to_dict())
    assert np.array_equal(clone.W, proj.W)
    assert np.array_equal(clone.b, proj.b)
    assert clone.dropout_rate == proj.dropout_rate
