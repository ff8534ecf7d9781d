"""Acceptance suite: one test per release criterion, at pinned tolerances.

Each test prints a single PASS line on success (visible with `pytest -s`);
a failure reads as the criterion name. Tolerances and fixture sizes are
fixed here, not configurable.
"""

import json
import math
import time

import numpy as np
import pytest
from click.testing import CliRunner
from scipy.stats import spearmanr

from conftest import FIXTURES
from oracles import monte_carlo_ei, naive_mll, naive_posterior
from poolbo.acquisition import expected_improvement
from poolbo.cli import main as cli_main
from poolbo.engine import EngineConfig, InitPolicy, run_bo
from poolbo.gp import (GPHyperparams, PosteriorGaussian, fit_fixed, mll,
                       mll_and_grad_features)
from poolbo.metrics import CoverageSpec, mean_pairwise_distance
from poolbo.pools import CandidatePool, load_pool, save_pool
from poolbo.projection import elu, init_projection, project
from poolbo.synth import SyntheticSpec, generate
from poolbo.training import TrainConfig, contrastive_trace, joint_fit

GRAD_RTOL = 1e-4
GRAD_ABS_FLOOR = 1e-7
ORACLE_TOL = 1e-8
EI_TOL = 1e-3
SEEDS = range(1, 21)


def _announce(name):
    print(f"\nACCEPTANCE {name}: PASS")


# -- criterion 1: gradient correctness ------------------------------------------


def test_gradient_correctness_vs_finite_differences():
    """>= 100 random joint instances; all theta and phi gradients within
    1e-4 relative (1e-7 absolute floor) of central differences; < 1 min."""
    start = time.time()
    rng = np.random.default_rng(20240601)
    checked = 0
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(4, 21))
        d = int(rng.integers(2, 9))
        m = int(rng.integers(2, 5))
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        W = init_projection(d, m, seed=int(rng.integers(1 << 30))).W
        b = 0.1 * rng.standard_normal(m)
        theta = np.array([rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7),
                          rng.uniform(-6.0, -2.0), rng.uniform(-0.3, 0.3)])

        def f(theta_vec, W_, b_):
            Z = elu(X @ W_.T + b_)
            return mll(Z, y, GPHyperparams.from_array(theta_vec))

        A = X @ W.T + b
        Z = elu(A)
        _, g_theta, g_Z = mll_and_grad_features(Z, y, GPHyperparams.from_array(theta))
        gA = g_Z * np.where(A > 0, 1.0, np.exp(np.minimum(A, 0)))
        analytic = np.concatenate([g_theta, (gA.T @ X).ravel(), gA.sum(axis=0)])

        h = 1e-5
        fd = np.zeros_like(analytic)
        k = 0
        for i in range(4):
            tp, tm = theta.copy(), theta.copy()
            tp[i] += h
            tm[i] -= h
            fd[k] = (f(tp, W, b) - f(tm, W, b)) / (2 * h)
            k += 1
        for i in range(m):
            for j in range(d):
                Wp, Wm = W.copy(), W.copy()
                Wp[i, j] += h
                Wm[i, j] -= h
                fd[k] = (f(theta, Wp, b) - f(theta, Wm, b)) / (2 * h)
                k += 1
        for i in range(m):
            bp, bm = b.copy(), b.copy()
            bp[i] += h
            bm[i] -= h
            fd[k] = (f(theta, W, bp) - f(theta, W, bm)) / (2 * h)
            k += 1

        # 1e-4 relative with a 1e-7 absolute floor (dead units give exact-zero
        # analytic gradients whose FD counterpart is pure roundoff noise).
        tol = np.maximum(GRAD_RTOL * np.abs(fd), GRAD_ABS_FLOOR)
        gap = np.abs(analytic - fd)
        worst = max(worst, float(np.max(gap / tol)))
        assert np.all(gap <= tol), \
            f"instance {checked}: worst gap {np.max(gap):.2e} at tol {tol[np.argmax(gap / tol)]:.2e}"
        checked += 1
    elapsed = time.time() - start
    assert checked >= 100
    assert elapsed < 60.0, f"gradient check took {elapsed:.1f}s"
    _announce(f"gradient-correctness (100 instances, worst gap {worst:.2e} of "
              f"tolerance, {elapsed:.1f}s)")


# -- criterion 2: oracle equivalence --------------------------------------------


def test_mll_and_posterior_match_dense_inverse_oracle():
    """mll and posterior agree with naive dense-inverse math within 1e-8
    on every fixture with n <= 20."""
    rng = np.random.default_rng(7)
    fixtures = []
    for seed in range(12):
        n = int(rng.integers(2, 21))
        d = int(rng.integers(1, 6))
        fixtures.append((rng.standard_normal((n, d)),
                         rng.standard_normal(n)))
    for name in ("gp_draw_n60", "clusters2_n120"):
        pool = load_pool(FIXTURES / f"{name}.pool", "binary")
        fixtures.append((pool.X[:20], pool.y[:20]))

    worst = 0.0
    for X, y in fixtures:
        params = GPHyperparams.from_values(
            lengthscale=float(rng.uniform(0.5, 3.0)),
            signal_var=float(rng.uniform(0.5, 2.0)),
            noise_var=float(rng.uniform(1e-4, 1e-1)),
            mean_const=float(rng.uniform(-0.5, 0.5)))
        got = mll(X, y, params)
        want = naive_mll(X, y, params.lengthscale, params.signal_var,
                         params.noise_var, params.mean_const)
        worst = max(worst, abs(got - want))
        assert abs(got - want) < ORACLE_TOL

        fit = fit_fixed(X, y, init=params, restarts=1, max_evals=1,
                        standardize=False)
        Xq = rng.standard_normal((7, X.shape[1]))
        for include_noise in (False, True):
            post = fit.posterior(Xq, include_noise=include_noise)
            mean, var = naive_posterior(X, y, Xq, params.lengthscale,
                                        params.signal_var, params.noise_var,
                                        params.mean_const, include_noise)
            assert np.max(np.abs(post.mean - mean)) < ORACLE_TOL
            assert np.max(np.abs(post.variance - var)) < ORACLE_TOL
    _announce(f"oracle-equivalence ({len(fixtures)} fixtures, worst mll diff "
              f"{worst:.2e})")


# -- criterion 3: EI correctness -------------------------------------------------


def test_ei_matches_monte_carlo_on_grid():
    """Closed-form EI within 1e-3 absolute of a 10^6-sample MC oracle on a
    (mu - f_best, s) grid including s = 0."""
    worst = 0.0
    for delta in (-3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0):
        for s in (0.0, 0.1, 0.5, 1.0, 2.0):
            ei = expected_improvement(
                PosteriorGaussian(np.array([delta]), np.array([s * s])), 0.0)[0]
            mc = monte_carlo_ei(delta, s, 0.0, n_samples=1_000_000,
                                seed=int(1000 * delta + 10 * s) & 0x7FFF)
            worst = max(worst, abs(ei - mc))
            assert abs(ei - mc) < EI_TOL, f"delta={delta} s={s}: {ei} vs {mc}"
    _announce(f"ei-monte-carlo (35 grid points, worst abs err {worst:.2e})")


# -- criterion 4: BO efficacy ----------------------------------------------------


def test_bo_efficacy_on_planted_clusters():
    """Planted clusters (n=300, d=16, k=3), T=50, seeds 1-20: deep median
    coverage >= 2x random baseline; deep >= fixed in >= 60% of seeds;
    < 10 minutes."""
    start = time.time()
    pool = load_pool(FIXTURES / "clusters_n300.pool", "binary")
    spec = CoverageSpec.from_pool(pool, 0.05)

    def one(kind, acq, seed):
        cfg = EngineConfig(surrogate=kind, acquisition=acq, iterations=50,
                           init=InitPolicy(n_init=10), projection_width=64,
                           dropout=0.1, train=TrainConfig(epochs=200),
                           fit_restarts=4, fit_max_evals=200)
        return spec.coverage(run_bo(pool, cfg, seed).observed_ids)

    deep = np.array([one("deep", "ei", s) for s in SEEDS])
    fixed = np.array([one("fixed", "ei", s) for s in SEEDS])
    rand = np.array([one("fixed", "random", s) for s in SEEDS])
    elapsed = time.time() - start

    deep_med, rand_med = float(np.median(deep)), float(np.median(rand))
    wins = float(np.mean(deep >= fixed))
    assert deep_med >= 2.0 * rand_med, (deep_med, rand_med)
    assert wins >= 0.60, f"deep >= fixed in only {wins:.0%} of seeds"
    assert elapsed < 600.0, f"efficacy run took {elapsed:.0f}s"
    _announce(f"bo-efficacy (deep median {deep_med:.2f} vs random {rand_med:.2f} "
              f"[{deep_med / max(rand_med, 1e-9):.1f}x], fixed median "
              f"{float(np.median(fixed)):.2f}, deep>=fixed {wins:.0%}, "
              f"{elapsed:.0f}s)")


# -- criterion 5: implicit contrastive effect ------------------------------------


def test_separation_score_increases_under_training():
    """After joint training on planted clusters the between/within class
    distance ratio strictly increases vs initialization in >= 15/20 seeds."""
    pool = load_pool(FIXTURES / "clusters_n300.pool", "binary")
    increases = 0
    pairs = []
    for seed in SEEDS:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0]))
        idx = rng.choice(pool.n, size=60, replace=False)
        X, y = pool.X[idx], pool.y[idx]
        proj = init_projection(pool.d, 64, seed=seed, dropout_rate=0.1)
        fit = joint_fit(X, y, projection=proj,
                        cfg=TrainConfig(epochs=200, seed=seed),
                        trace_features_every=200)
        stats = contrastive_trace(fit, X, y)
        before, after = stats[0]["separation"], stats[-1]["separation"]
        pairs.append((before, after))
        if after > before:
            increases += 1
    assert increases >= 15, f"separation increased in only {increases}/20 seeds"
    med_before = float(np.median([p[0] for p in pairs]))
    med_after = float(np.median([p[1] for p in pairs]))
    _announce(f"implicit-contrastive ({increases}/20 seeds, median separation "
              f"{med_before:.2f} -> {med_after:.2f})")


# -- criterion 6: smoothness diagnostic ------------------------------------------


def test_smoothness_ratio_correlates_with_coverage():
    """Across >= 6 representations of one objective (rotation, noise
    corruption, shuffled labels), Spearman(smoothness ratio, coverage) of
    20-seed medians exceeds 0.5."""
    base = generate(SyntheticSpec(n=200, d=8, generator="gp_draw",
                                  params={"lengthscale": 2.0, "signal_var": 1.0,
                                          "noise_var": 1e-4}, seed=31))
    rng = np.random.default_rng(99)
    Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    reps = [
        ("identity", base.X, base.y),
        ("rotated", base.X @ Q, base.y),
        ("noise-0.5", base.X + 0.5 * rng.standard_normal(base.X.shape), base.y),
        ("noise-1.0", base.X + 1.0 * rng.standard_normal(base.X.shape), base.y),
        ("noise-2.0", base.X + 2.0 * rng.standard_normal(base.X.shape), base.y),
        ("noise-4.0", base.X + 4.0 * rng.standard_normal(base.X.shape), base.y),
        ("shuffled-labels", base.X, np.random.default_rng(7).permutation(base.y)),
    ]
    cfg = EngineConfig(surrogate="fixed", acquisition="ei", iterations=50,
                       init=InitPolicy(n_init=10), fit_restarts=2,
                       fit_max_evals=60)
    cov_medians, ratio_medians = [], []
    for name, X, y in reps:
        pool = CandidatePool(ids=base.ids, X=X, y=y)
        spec = CoverageSpec.from_pool(pool, 0.05)
        covs, ratios = [], []
        for seed in SEEDS:
            covs.append(spec.coverage(run_bo(pool, cfg, seed).observed_ids))
            split = np.random.default_rng(np.random.SeedSequence([seed, 0xAB]))
            idx = split.permutation(pool.n)[:60]
            fit = fit_fixed(pool.X[idx], pool.y[idx], seed=seed, restarts=2,
                            max_evals=60)
            ratios.append(fit.params.lengthscale / mean_pairwise_distance(pool.X))
        cov_medians.append(float(np.median(covs)))
        ratio_medians.append(float(np.median(ratios)))
    rho = float(spearmanr(ratio_medians, cov_medians).statistic)
    assert rho > 0.5, f"Spearman {rho:.3f} over {len(reps)} representations"
    _announce(f"smoothness-diagnostic (Spearman {rho:.2f} over {len(reps)} "
              f"representations)")


# -- criterion 7: determinism ----------------------------------------------------


def test_cmd_run_reruns_are_byte_identical(tmp_path):
    """Identical configs produce byte-identical metric CSVs and event logs."""
    pool_path = FIXTURES / "clusters2_n120.pool"
    config_path = tmp_path / "exp.yaml"
    config_path.write_text(
        "dataset:\n"
        f"  path: {pool_path}\n"
        "  format: binary\n"
        "surrogate: deep-projection\n"
        "iterations: 5\n"
        "seeds: [1, 2, 3]\n"
        "training:\n  epochs: 40\n"
        "fit:\n  restarts: 1\n  max_evals: 30\n")
    runner = CliRunner()
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        result = runner.invoke(cli_main, ["run", "--config", str(config_path),
                                          "--workers", "2", "--out", str(out)])
        assert result.exit_code == 0, result.output
        outs.append(out)
    identical = []
    for rel in ("metrics.csv", "aggregate.csv"):
        a = (outs[0] / rel).read_bytes()
        b = (outs[1] / rel).read_bytes()
        assert a == b, f"{rel} differs between reruns"
        identical.append(rel)
    logs_a = sorted(outs[0].glob("runs/*/events.jsonl"))
    for log_a in logs_a:
        log_b = outs[1] / log_a.relative_to(outs[0])
        assert log_a.read_bytes() == log_b.read_bytes()
    _announce(f"determinism ({', '.join(identical)} and {len(logs_a)} event "
              f"logs byte-identical)")


# -- criterion 8: fixed-split diagnostics protocol -------------------------------


def test_diagnose_runs_60_train_rest_eval_protocol(tmp_path):
    """cmd_diagnose performs the 60-train/rest-eval split pipeline with
    finite NLPD and R^2 in [-1, 1] on GP-drawn data."""
    pool = generate(SyntheticSpec(n=80, d=3, generator="gp_draw",
                                  params={"lengthscale": 1.5, "signal_var": 1.0,
                                          "noise_var": 1e-3}, seed=23))
    pool_path = tmp_path / "gp80.bin"
    save_pool(pool, pool_path, "binary")
    out = tmp_path / "diag"
    runner = CliRunner()
    result = runner.invoke(cli_main, ["diagnose", "--pool", str(pool_path),
                                      "--format", "binary", "--out", str(out),
                                      "--repeats", "20", "--train-size", "60",
                                      "--seed", "0"])
    assert result.exit_code == 0, result.output
    doc = json.loads((out / "diagnostics.json").read_text())
    assert doc["train_size"] == 60
    assert len(doc["per_repeat"]) == 20
    for row in doc["per_repeat"]:
        assert math.isfinite(row["nlpd"]), "NLPD not finite"
        assert -1.0 <= row["r2"] <= 1.0, f"R^2 {row['r2']} outside [-1, 1]"
    agg = doc["aggregate"]
    _announce(f"diagnostics-protocol (20 repeats, R2 {agg['r2']['mean']:.2f} "
              f"+/- {agg['r2']['std']:.2f}, NLPD {agg['nlpd']['mean']:.2f})")
