"""Command-line interface: run, suggest, tell, diagnose, report, validate.

Every command validates its inputs fully before touching any file. All
randomness comes from config seeds, so reruns with identical inputs produce
byte-identical outputs.
"""

from __future__ import annotations

import os
import sys
from dataclasses import replace
from pathlib import Path

import click

from .config import ExperimentConfig, load_experiment_config
from .engine import append_events, open_session_dir, save_session_dir
from .errors import ConfigError, PoolboError
from .harness import diagnose_pool, reaggregate, run_sweep
from .pools import infer_format, load_pool


@click.group()
def main():
    """Bayesian optimization over candidate pools of embeddings."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--workers", type=int, default=None,
              help="Concurrent seed runs (default: available cores).")
@click.option("--out", "out_dir", default=None,
              help="Output root (default: the config's output key).")
@click.option("--seed", "seeds", type=int, multiple=True,
              help="Restrict the sweep to these seeds.")
def run(config_path, workers, out_dir, seeds):
    """Execute a seeded sweep: one event log and metrics file per run."""
    try:
        cfg = load_experiment_config(config_path)
        if seeds:
            cfg = replace(cfg, seeds=sorted(set(seeds)))
        load_pool(cfg.pool_path, cfg.pool_format)  # fail before any run
    except PoolboError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    out_root = Path(out_dir) if out_dir else Path(cfg.output)
    code = run_sweep(cfg, out_root, workers=workers or os.cpu_count() or 1)
    if code != 0:
        click.echo("one or more runs failed; see runs/*/error.json", err=True)
    sys.exit(code)


@main.command()
@click.argument("session_dir", type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Initialize the session from this config on first use.")
@click.option("--seed", type=int, default=None,
              help="Session seed on first use (default: first config seed).")
def suggest(session_dir, config_path, seed):
    """Print the next candidate id (with posterior mean/std when modeled).

    Repeated calls without an intervening tell print the same candidate.
    """
    session_dir = Path(session_dir)
    try:
        if not (session_dir / "session.json").exists():
            if config_path is None:
                raise ConfigError(f"{session_dir} is not an initialized session; "
                                  "pass --config to create one")
            cfg = load_experiment_config(config_path)
            session_dir.mkdir(parents=True, exist_ok=True)
            save_session_dir(session_dir, cfg.pool_path, cfg.pool_format,
                             cfg.engine(), seed if seed is not None else cfg.seeds[0])
        session = open_session_dir(session_dir)
        proposal = session.compute_suggestion()
    except PoolboError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if proposal.posterior_mean is None:
        click.echo(proposal.candidate_id)
    else:
        click.echo(f"{proposal.candidate_id} "
                   f"posterior_mean={proposal.posterior_mean!r} "
                   f"posterior_std={proposal.posterior_std!r}")


@main.command()
@click.argument("session_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("candidate_id")
@click.argument("value", type=float)
def tell(session_dir, candidate_id, value):
    """Record an observed objective value for a candidate."""
    try:
        session = open_session_dir(session_dir)
        before = len(session.events)
        session.tell(candidate_id, value)
    except PoolboError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    append_events(session_dir, session.events[before:])
    click.echo(f"recorded {candidate_id} = {value!r} "
               f"(iteration {session.iteration})")


@main.command()
@click.option("--pool", "pool_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "pool_format", type=click.Choice(["csv", "binary"]),
              default=None, help="Pool format (default: by file suffix).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Surrogate settings (default: fixed-feature GP).")
@click.option("--out", "out_dir", default="diagnostics")
@click.option("--repeats", type=int, default=20)
@click.option("--train-size", type=int, default=60)
@click.option("--seed", type=int, default=0)
def diagnose(pool_path, pool_format, config_path, out_dir, repeats, train_size, seed):
    """Fit-quality and representation diagnostics on a labeled pool."""
    try:
        fmt = pool_format or infer_format(pool_path)
        pool = load_pool(pool_path, fmt)
        if config_path is not None:
            cfg = load_experiment_config(config_path)
        else:
            cfg = ExperimentConfig(pool_path=str(pool_path), pool_format=fmt,
                                   surrogate="fixed")
        diagnose_pool(pool, cfg, out_dir, repeats=repeats,
                      train_size=train_size, seed=seed)
    except PoolboError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"diagnostics written to {out_dir}")


@main.command()
@click.option("--out", "out_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Sweep output root containing runs/.")
def report(out_dir):
    """Rebuild the aggregate report from per-run metrics."""
    try:
        code = reaggregate(out_dir)
    except PoolboError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"report written to {out_dir}")
    sys.exit(code)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--pool", "pool_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--format", "pool_format", type=click.Choice(["csv", "binary"]),
              default=None)
def validate(config_path, pool_path, pool_format):
    """Check a config file and/or a pool file without running anything."""
    if config_path is None and pool_path is None:
        click.echo("error: pass --config and/or --pool", err=True)
        sys.exit(1)
    try:
        if config_path is not None:
            cfg = load_experiment_config(config_path)
            click.echo(f"config ok: surrogate={cfg.surrogate} "
                       f"acquisition={cfg.acquisition} iterations={cfg.iterations} "
                       f"seeds={len(cfg.seeds)}")
        if pool_path is not None:
            fmt = pool_format or infer_format(pool_path)
            pool = load_pool(pool_path, fmt)
            click.echo(f"pool ok: n={pool.n} d={pool.d} "
                       f"labeled={str(pool.labeled).lower()}")
    except PoolboError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
