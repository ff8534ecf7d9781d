"""Sequential optimization over a candidate pool.

One code path drives both modes: batch simulation on labeled pools and the
interactive suggest/tell split. A suggestion is a pure function of (pool,
config, seed, observed set); telling an observation appends to the session's
event log. All randomness is derived from the session seed and the iteration
index, never from wall clock or OS entropy, so sessions replay exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .acquisition import AcquisitionScore, random_select, select_next
from .errors import DataError, PoolExhaustedError
from .gp import FittedSurrogate, GPHyperparams, fit_fixed
from .pools import CandidatePool, load_pool
from .projection import init_projection
from .training import TrainConfig, joint_fit

SCHEMA_VERSION = 1

# Tags for deriving independent random streams from (seed, iteration).
_TAG_INIT, _TAG_PROJ, _TAG_TRAIN, _TAG_FIT, _TAG_TIE, _TAG_RAND = range(6)


def _rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *path]))


@dataclass(frozen=True)
class InitPolicy:
    """How the first observations are drawn before any model exists."""

    n_init: int = 10
    rule: str = "lower_median"  # lower_median | uniform

    def __post_init__(self):
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if self.rule not in ("lower_median", "uniform"):
            raise ValueError(f"unknown init rule {self.rule!r}")


@dataclass(frozen=True)
class EngineConfig:
    """Everything a session needs besides the pool and the seed."""

    surrogate: str = "deep"          # fixed | deep
    acquisition: str = "ei"          # ei | random
    iterations: int = 50
    init: InitPolicy = field(default_factory=InitPolicy)
    projection_width: int = 64
    dropout: float = 0.1
    train: TrainConfig = field(default_factory=TrainConfig)
    fit_restarts: int = 4
    fit_max_evals: int = 200
    warm_start: bool = False

    def __post_init__(self):
        if self.surrogate not in ("fixed", "deep"):
            raise ValueError(f"unknown surrogate kind {self.surrogate!r}")
        if self.acquisition not in ("ei", "random"):
            raise ValueError(f"unknown acquisition {self.acquisition!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    def to_dict(self) -> dict:
        d = {"surrogate": self.surrogate, "acquisition": self.acquisition,
             "iterations": self.iterations,
             "init": {"n_init": self.init.n_init, "rule": self.init.rule},
             "projection_width": self.projection_width, "dropout": self.dropout,
             "train": vars(self.train).copy(),
             "fit_restarts": self.fit_restarts, "fit_max_evals": self.fit_max_evals,
             "warm_start": self.warm_start}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EngineConfig":
        d = dict(d)
        init = InitPolicy(**d.pop("init", {}))
        train = TrainConfig(**d.pop("train", {}))
        return cls(init=init, train=train, **d)


def init_design(pool: CandidatePool, policy: InitPolicy, seed: int) -> list[str]:
    """Seeded draw of initial candidates.

    The lower_median rule samples uniformly without replacement from the
    candidates whose objective is at or below the pool median (boundary
    ties included), emulating a start from poor experiments.
    """
    if not pool.labeled:
        raise DataError("initial design needs a labeled pool")
    if policy.rule == "lower_median" and 2 * policy.n_init > pool.n:
        raise DataError(f"n_init={policy.n_init} exceeds half the pool ({pool.n})")
    rng = _rng(seed, _TAG_INIT)
    if policy.rule == "lower_median":
        eligible = np.flatnonzero(pool.y <= np.median(pool.y))
    else:
        eligible = np.arange(pool.n)
    if eligible.size < policy.n_init:
        raise DataError(f"only {eligible.size} candidates eligible for "
                        f"n_init={policy.n_init}")
    chosen = rng.choice(eligible, size=policy.n_init, replace=False)
    return [pool.ids[i] for i in chosen]


@dataclass
class Suggestion:
    """Pure output of one acquisition round: proposal plus fit context."""

    iteration: int
    candidate_id: str
    score: Optional[float]
    posterior_mean: Optional[float]
    posterior_std: Optional[float]
    fit: Optional[FittedSurrogate]


class BOSession:
    """Resumable optimization state backed by an append-only event log."""

    def __init__(self, pool: CandidatePool, config: EngineConfig, seed: int,
                 initial: Optional[list[tuple[str, float]]] = None):
        self.pool = pool
        self.config = config
        self.seed = int(seed)
        self.observed: list[tuple[str, float]] = []
        self.initial_ids: list[str] = []
        self._remaining: dict[str, int] = {cid: i for i, cid in enumerate(pool.ids)}
        self.events: list[dict] = []
        self.exhausted = False
        self._last_suggestion: Optional[Suggestion] = None
        self._warm_fit: Optional[FittedSurrogate] = None
        self.last_fit: Optional[FittedSurrogate] = None
        for cid, y in initial or []:
            self._take(cid, float(y), initial=True)
        self._log({"event": "init", "schema": SCHEMA_VERSION, "seed": self.seed,
                   "config": config.to_dict(), "pool_n": pool.n, "pool_d": pool.d,
                   "initial": [[cid, y] for cid, y in self.observed]})

    # -- state ---------------------------------------------------------------

    @property
    def iteration(self) -> int:
        return len(self.observed) - len(self.initial_ids)

    @property
    def observed_ids(self) -> list[str]:
        return [cid for cid, _ in self.observed]

    @property
    def remaining_ids(self) -> list[str]:
        return list(self._remaining)

    @property
    def best_observed(self) -> tuple[str, float]:
        return max(self.observed, key=lambda item: item[1])

    def best_trace(self) -> list[float]:
        """Best-so-far objective after each observation (non-decreasing)."""
        out, best = [], -np.inf
        for _, y in self.observed:
            best = max(best, y)
            out.append(best)
        return out

    def remaining_pool(self) -> CandidatePool:
        return self.pool.subset(self._remaining.values())

    def _take(self, cid: str, y: float, initial: bool = False):
        if cid not in self._remaining:
            raise DataError(f"unknown or already observed id {cid!r}")
        if not np.isfinite(y):
            raise DataError(f"non-finite observation for id {cid!r}")
        del self._remaining[cid]
        self.observed.append((cid, float(y)))
        if initial:
            self.initial_ids.append(cid)

    def _log(self, record: dict):
        self.events.append(record)

    # -- the fit/score/select step --------------------------------------------

    def _fit_surrogate(self, t: int) -> FittedSurrogate:
        ids = self.observed_ids
        idx = [self.pool.index_of(c) for c in ids]
        X = self.pool.X[idx]
        y = np.array([v for _, v in self.observed])
        cfg = self.config
        if cfg.surrogate == "fixed":
            return fit_fixed(X, y, restarts=cfg.fit_restarts,
                             max_evals=cfg.fit_max_evals,
                             seed=_seed_scalar(self.seed, t, _TAG_FIT),
                             train_ids=ids)
        if cfg.warm_start and self._warm_fit is not None:
            proj = self._warm_fit.projection.copy()
            init = self._warm_fit.params
        else:
            proj = init_projection(self.pool.d, cfg.projection_width,
                                   seed=_seed_scalar(self.seed, t, _TAG_PROJ),
                                   dropout_rate=cfg.dropout)
            init = GPHyperparams()
        train_cfg = replace(cfg.train, seed=_seed_scalar(self.seed, t, _TAG_TRAIN))
        return joint_fit(X, y, projection=proj, init=init, cfg=train_cfg,
                         train_ids=ids)

    def compute_suggestion(self) -> Suggestion:
        """Pure acquisition round at the current state (repeatable)."""
        if not self._remaining:
            raise PoolExhaustedError("candidate pool exhausted")
        t = self.iteration
        last = self._last_suggestion
        if last is not None and last.iteration == t:
            return last
        if self.config.acquisition == "random":
            cid = random_select(self.remaining_pool(), _rng(self.seed, t, _TAG_RAND))
            suggestion = Suggestion(t, cid, None, None, None, None)
        else:
            if len(self.observed) < 2:
                raise DataError("need at least 2 observations before suggesting; "
                                "tell() some or use a labeled pool with init_design")
            if self.config.warm_start and self._warm_fit is None and t > 0:
                self._rebuild_warm_chain(t)
            fit = self._fit_surrogate(t)
            sel: AcquisitionScore = select_next(fit, self.remaining_pool(),
                                                self.best_observed[1],
                                                _rng(self.seed, t, _TAG_TIE))
            suggestion = Suggestion(t, sel.candidate_id, sel.score,
                                    sel.posterior_mean, sel.posterior_std, fit)
        self._last_suggestion = suggestion
        return suggestion

    def _rebuild_warm_chain(self, t: int):
        # Warm starts chain fits across iterations; replaying the chain from
        # the event log keeps resumed sessions on the same trajectory. The
        # fit at iteration k depends only on the observed prefix and the
        # derived seeds, so the rebuild reproduces the in-process chain.
        saved = list(self.observed)
        init_n = len(self.initial_ids)
        for k in range(t):
            if init_n + k < 2:
                continue  # nothing could have been fitted this early
            self.observed = saved[:init_n + k]
            self._warm_fit = self._fit_surrogate(k)
        self.observed = saved

    def suggest(self) -> Suggestion:
        return self.compute_suggestion()

    def tell(self, cid: str, y: float) -> "BOSession":
        """Record one observation; out-of-band ids are accepted and flagged.

        When no suggestion is cached (fresh process), the deterministic
        suggestion for this iteration is recomputed so in-band tells carry
        the same fit records batch mode would have logged.
        """
        t = self.iteration
        suggestion = self._last_suggestion
        if suggestion is None or suggestion.iteration != t:
            try:
                suggestion = self.compute_suggestion()
            except (DataError, PoolExhaustedError):
                suggestion = None
        in_band = (suggestion is not None and suggestion.iteration == t
                   and suggestion.candidate_id == cid)
        self._take(cid, y)  # raises before any logging on bad input
        if in_band and suggestion.fit is not None:
            p = suggestion.fit.params
            self._log({"event": "fit", "iteration": t,
                       "kind": suggestion.fit.kind,
                       "mll": suggestion.fit.best_mll,
                       "hyperparams": p.to_dict()})
        self._log({"event": "selection", "iteration": t, "id": cid,
                   "score": suggestion.score if in_band else None,
                   "posterior_mean": suggestion.posterior_mean if in_band else None,
                   "posterior_std": suggestion.posterior_std if in_band else None,
                   "out_of_band": not in_band})
        self._log({"event": "observation", "iteration": t, "id": cid, "y": float(y)})
        if suggestion is not None and suggestion.fit is not None:
            self.last_fit = suggestion.fit
            if self.config.warm_start:
                # Out-of-band tells advance the warm state too: the chain
                # rebuild after a resume refits every iteration, so the
                # in-process state has to match it.
                self._warm_fit = suggestion.fit
        self._last_suggestion = None
        return self

    # -- persistence -----------------------------------------------------------

    def write_events(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.events:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def new_session(pool: CandidatePool, config: EngineConfig, seed: int) -> BOSession:
    """Fresh session; labeled pools get their initial design immediately."""
    initial = None
    if pool.labeled:
        ids = init_design(pool, config.init, seed)
        initial = [(cid, float(pool.y[pool.index_of(cid)])) for cid in ids]
    return BOSession(pool, config, seed, initial=initial)


def run_bo(pool: CandidatePool, config: EngineConfig, seed: int) -> BOSession:
    """Simulate the full loop on a labeled pool: fit, score, select, reveal.

    Runs config.iterations steps (or until the pool runs out, flagged); the
    returned session carries the complete event log.
    """
    if not pool.labeled:
        raise DataError("run_bo needs a labeled pool (simulation mode)")
    session = new_session(pool, config, seed)
    for _ in range(config.iterations):
        if not session._remaining:
            session.exhausted = True
            break
        suggestion = session.compute_suggestion()
        y = float(pool.y[pool.index_of(suggestion.candidate_id)])
        session.tell(suggestion.candidate_id, y)
    session._log({"event": "end", "iterations": session.iteration,
                  "exhausted": session.exhausted})
    return session


def replay_session(pool: CandidatePool, events: list[dict],
                   config: Optional[EngineConfig] = None) -> BOSession:
    """Reconstruct session state from its event log (audit/resume path)."""
    init_event = next(e for e in events if e["event"] == "init")
    if init_event.get("schema") != SCHEMA_VERSION:
        raise DataError(f"unsupported event schema {init_event.get('schema')!r}")
    config = config or EngineConfig.from_dict(init_event["config"])
    session = BOSession(pool, config, init_event["seed"],
                        initial=[(cid, y) for cid, y in init_event["initial"]])
    for record in events:
        if record["event"] == "observation":
            session._take(record["id"], record["y"])
        elif record["event"] == "end":
            session.exhausted = record["exhausted"]
    session.events = [dict(e) for e in events]
    return session


def load_events(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _seed_scalar(seed: int, iteration: int, tag: int) -> int:
    # Collapse (seed, iteration, tag) into one integer seed for components
    # that take a scalar; SeedSequence does the avalanche mixing.
    return int(np.random.SeedSequence([seed, iteration, tag]).generate_state(1)[0])


# -- session directories (used by the CLI) -------------------------------------

def save_session_dir(directory, pool_path, pool_format, config: EngineConfig,
                     seed: int) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {"schema": SCHEMA_VERSION, "seed": seed, "pool_path": str(pool_path),
           "pool_format": pool_format, "config": config.to_dict()}
    (directory / "session.json").write_text(json.dumps(doc, indent=2, sort_keys=True))


def open_session_dir(directory) -> BOSession:
    directory = Path(directory)
    doc = json.loads((directory / "session.json").read_text())
    if doc.get("schema") != SCHEMA_VERSION:
        raise DataError(f"unsupported session schema {doc.get('schema')!r}")
    pool_path = Path(doc["pool_path"])
    if not pool_path.is_absolute():
        pool_path = directory / pool_path
    pool = load_pool(pool_path, doc["pool_format"])
    config = EngineConfig.from_dict(doc["config"])
    events_path = directory / "events.jsonl"
    if events_path.exists():
        session = replay_session(pool, load_events(events_path), config)
    else:
        session = new_session(pool, config, doc["seed"])
        append_events(directory, session.events)
    return session


def append_events(directory, records: list[dict]) -> None:
    with open(Path(directory) / "events.jsonl", "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
