"""Sweep execution and the diagnostics pipeline behind the CLI.

A sweep runs one configuration across its seed list (optionally in worker
processes), writes one directory per run (event log plus metrics), then a
per-run metrics CSV, an aggregate CSV and a JSON report. Runs are isolated:
one seed failing leaves the others standing and flips the exit code to 2.
All output bytes are deterministic functions of the config.
"""

from __future__ import annotations

import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .engine import run_bo
from .errors import DataError
from .gp import GPHyperparams, fit_fixed
from .metrics import (CoverageSpec, aggregate, class_pair_distances,
                      histogram_csv_rows, nlpd_details, r2, smoothness_ratio,
                      weighted_r2)
from .pools import CandidatePool, load_pool
from .projection import init_projection
from .training import joint_fit

REPORT_SCHEMA = 1

_METRIC_COLUMNS = ["seed", "surrogate", "acquisition", "coverage", "best_y",
                   "iterations", "n_observed", "exhausted", "final_mll",
                   "lengthscale", "signal_var", "noise_var", "mean_const",
                   "smoothness_ratio"]

_AGGREGATE_METRICS = ["coverage", "best_y", "final_mll", "smoothness_ratio"]


def run_single(config: ExperimentConfig, seed: int, run_dir) -> dict:
    """One seeded run: simulate, persist the event log, compute metrics."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    pool = load_pool(config.pool_path, config.pool_format)
    session = run_bo(pool, config.engine(), seed)
    session.write_events(run_dir / "events.jsonl")

    spec = CoverageSpec.from_pool(pool, config.coverage_quantile)
    metrics = {
        "seed": seed,
        "surrogate": config.surrogate,
        "acquisition": config.acquisition,
        "coverage": spec.coverage(session.observed_ids),
        "best_y": session.best_observed[1],
        "iterations": session.iteration,
        "n_observed": len(session.observed),
        "exhausted": session.exhausted,
        "final_mll": None, "lengthscale": None, "signal_var": None,
        "noise_var": None, "mean_const": None, "smoothness_ratio": None,
    }
    fit = session.last_fit
    if fit is not None:
        p = fit.params
        metrics.update(final_mll=fit.best_mll, lengthscale=p.lengthscale,
                       signal_var=p.signal_var, noise_var=p.noise_var,
                       mean_const=p.mean_const,
                       smoothness_ratio=smoothness_ratio(fit, pool))
    (run_dir / "metrics.json").write_text(json.dumps(metrics, sort_keys=True))
    return metrics


def run_sweep(config: ExperimentConfig, out_root, workers: int = 1) -> int:
    """Execute all seeds; returns the process exit code (0 ok, 2 partial)."""
    out_root = Path(out_root)
    runs_dir = out_root / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(seed, runs_dir / f"seed-{seed:04d}") for seed in config.seeds]

    results: dict[int, dict] = {}
    failures: dict[int, str] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {seed: pool.submit(_run_guarded, config, seed, run_dir)
                       for seed, run_dir in jobs}
            outcomes = {seed: future.result() for seed, future in futures.items()}
    else:
        outcomes = {seed: _run_guarded(config, seed, run_dir)
                    for seed, run_dir in jobs}
    for seed, (status, payload) in outcomes.items():
        if status == "ok":
            results[seed] = payload
        else:
            failures[seed] = payload

    rows = [results[seed] for seed in sorted(results)]
    write_report(out_root, config, rows, failures)
    return 0 if not failures else 2


def _run_guarded(config: ExperimentConfig, seed: int, run_dir) -> tuple[str, object]:
    """run_single with per-run isolation; failures land in error.json."""
    try:
        return "ok", run_single(config, seed, run_dir)
    except Exception as exc:
        message = f"{type(exc).__name__}: {exc}"
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "error.json").write_text(json.dumps(
            {"seed": seed, "error": message,
             "traceback": traceback.format_exc()}, sort_keys=True))
        return "error", message


def write_report(out_root, config: ExperimentConfig, rows: list[dict],
                 failures: dict[int, str]) -> None:
    out_root = Path(out_root)
    _write_csv(out_root / "metrics.csv", _METRIC_COLUMNS,
               [[row[c] for c in _METRIC_COLUMNS] for row in rows])
    agg_rows, agg_stats = [], {}
    numeric = [{m: row[m] for m in _AGGREGATE_METRICS if row[m] is not None}
               for row in rows]
    numeric = [r for r in numeric if r]
    if numeric:
        report = aggregate(numeric)
        for name in _AGGREGATE_METRICS:
            if name in report.stats:
                s = report.stats[name]
                agg_rows.append([name, s.mean, s.std, s.n])
                agg_stats[name] = {"mean": s.mean, "std": s.std, "n": s.n}
    _write_csv(out_root / "aggregate.csv", ["metric", "mean", "std", "n"], agg_rows)
    doc = {"schema": REPORT_SCHEMA,
           "surrogate": config.surrogate, "acquisition": config.acquisition,
           "iterations": config.iterations, "seeds": config.seeds,
           "runs": rows, "aggregate": agg_stats,
           "failures": [{"seed": s, "error": failures[s]} for s in sorted(failures)]}
    (out_root / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=1))


def reaggregate(out_root) -> int:
    """Rebuild metrics.csv / aggregate.csv / report.json from run directories."""
    out_root = Path(out_root)
    runs_dir = out_root / "runs"
    if not runs_dir.is_dir():
        raise DataError(f"{runs_dir} does not exist")
    rows, failures = [], {}
    for run_dir in sorted(runs_dir.iterdir()):
        metrics_path = run_dir / "metrics.json"
        error_path = run_dir / "error.json"
        if metrics_path.exists():
            rows.append(json.loads(metrics_path.read_text()))
        elif error_path.exists():
            err = json.loads(error_path.read_text())
            failures[err["seed"]] = err["error"]
    if not rows and not failures:
        raise DataError(f"no runs found under {runs_dir}")
    rows.sort(key=lambda r: r["seed"])
    config = ExperimentConfig(pool_path="", pool_format="binary")
    if rows:
        config = replace(config, surrogate=rows[0]["surrogate"],
                         acquisition=rows[0]["acquisition"],
                         seeds=[r["seed"] for r in rows])
    write_report(out_root, config, rows, failures)
    return 0 if not failures else 2


# -- diagnostics pipeline -------------------------------------------------------


def diagnose_pool(pool: CandidatePool, config: ExperimentConfig, out_dir,
                  repeats: int = 20, train_size: int = 60, seed: int = 0) -> dict:
    """Fixed-split fit diagnostics: train on train_size points, score the rest.

    Per repeat: a seeded shuffle defines the split, the configured surrogate
    is fitted on the train part, and predictive quality (plain and
    top-weighted R^2, noise-inclusive NLPD on the raw scale) is measured on
    the held-out part. Representation diagnostics (smoothness ratio,
    class-pair distances) come from the fitted feature space.
    """
    if not pool.labeled:
        raise DataError("diagnostics need a labeled pool")
    if pool.n <= train_size:
        raise DataError(f"pool too small for a {train_size}-point train split "
                        f"(n={pool.n})")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    per_repeat = []
    first_fit = None
    for r in range(repeats):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r, 0xD1A6]))
        perm = rng.permutation(pool.n)
        train_idx, eval_idx = perm[:train_size], perm[train_size:]
        fit = _fit_for_diagnostics(pool, config, train_idx, seed_scalar=_mix(seed, r))
        if first_fit is None:
            first_fit = fit
            if fit.kind == "deep" and fit.trace:
                # per-epoch (mll, grad-norm, lr) records from the joint trainer
                _write_jsonl(out_dir / "training_trace.jsonl", fit.trace)
        post = fit.posterior(pool.X[eval_idx], include_noise=True, raw_scale=True)
        y_eval = pool.y[eval_idx]
        details = nlpd_details(y_eval, post)
        per_repeat.append({
            "repeat": r,
            "r2": r2(y_eval, post.mean),
            "weighted_r2": weighted_r2(y_eval, post.mean,
                                       top_quantile=config.coverage_quantile),
            "nlpd": details["value"],
            "nlpd_variance_floored": details["variance_floored"],
            "smoothness_ratio": smoothness_ratio(fit, pool),
            "lengthscale": fit.params.lengthscale,
            "train_mll": fit.best_mll,
        })

    numeric_keys = ["r2", "weighted_r2", "nlpd", "smoothness_ratio", "lengthscale"]
    report = aggregate([{k: row[k] for k in numeric_keys} for row in per_repeat])
    agg = {name: {"mean": s.mean, "std": s.std, "n": s.n}
           for name, s in report.stats.items()}
    doc = {"schema": REPORT_SCHEMA, "surrogate": config.surrogate,
           "repeats": repeats, "train_size": train_size, "seed": seed,
           "per_repeat": per_repeat, "aggregate": agg}
    (out_dir / "diagnostics.json").write_text(json.dumps(doc, sort_keys=True, indent=1))
    _write_csv(out_dir / "diagnostics.csv", ["metric", "mean", "std", "n"],
               [[name, agg[name]["mean"], agg[name]["std"], agg[name]["n"]]
                for name in numeric_keys])

    _write_class_pair_outputs(first_fit, pool, out_dir)
    return doc


def _fit_for_diagnostics(pool, config, train_idx, seed_scalar):
    X, y = pool.X[train_idx], pool.y[train_idx]
    ids = [pool.ids[i] for i in train_idx]
    if config.surrogate == "fixed":
        return fit_fixed(X, y, restarts=config.fit_restarts,
                         max_evals=config.fit_max_evals, seed=seed_scalar,
                         train_ids=ids)
    proj = init_projection(pool.d, config.projection_width, seed=seed_scalar,
                           dropout_rate=config.dropout)
    train_cfg = replace(config.train, seed=seed_scalar)
    return joint_fit(X, y, projection=proj, init=GPHyperparams(), cfg=train_cfg,
                     train_ids=ids)


def _write_class_pair_outputs(fit, pool, out_dir):
    Z = fit.features_of(pool.X)
    pairs = class_pair_distances(Z, pool.y)
    rows = []
    for family in ("high_high", "high_low", "low_low"):
        stats = pairs.summary[family]
        if stats is None:
            rows.append([family, "absent", "", ""])
        else:
            rows.append([family, stats["count"], stats["mean"], stats["median"]])
    _write_csv(out_dir / "class_pairs.csv", ["family", "count", "mean", "median"], rows)

    hist_rows = []
    for family, arr in (("high_high", pairs.high_high),
                        ("high_low", pairs.high_low),
                        ("low_low", pairs.low_low)):
        if arr is None or arr.size == 0:
            continue
        for start, end, count in histogram_csv_rows(arr):
            hist_rows.append([family, start, end, count])
    _write_csv(out_dir / "class_pair_hist.csv",
               ["family", "bin_start", "bin_end", "count"], hist_rows)


def _mix(seed: int, repeat: int) -> int:
    return int(np.random.SeedSequence([seed, repeat, 0xF17]).generate_state(1)[0])


def _write_jsonl(path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def _write_csv(path, header, rows) -> None:
    # repr() keeps full float precision and is byte-stable for reruns.
    def fmt(v):
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, (bool, np.bool_)):
            return str(bool(v)).lower()
        if v is None:
            return ""
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
