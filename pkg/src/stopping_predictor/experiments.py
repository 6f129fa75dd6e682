"""Seeded replications, trace tables and end-of-run summaries."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import EstimatorParams
from .predictor import OnlinePredictor
from .processes import Oracle, ProcessSpec, UnsupportedSpecError, generate


def replication_seed(master: int, r: int) -> int:
    """Seed of replication ``r``: first 64-bit word of ``SeedSequence([master, r])``."""
    return int(np.random.SeedSequence([int(master), int(r)]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    process: ProcessSpec | None
    params: EstimatorParams
    horizon: int
    replications: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        self.params.validate()
        if self.process is not None:
            self.process.validated()


@dataclass
class Replication:
    """Everything one run produced, with per-event estimates and oracle laws.

    Row ``i`` of ``estimates`` and ``oracle`` belongs to event ``r = i + 1``:
    the estimate after ``r`` stopping times and the true law of the symbol
    following ``lambdas[r]``.
    """

    index: int
    seed: int
    path: np.ndarray
    zetas: np.ndarray
    lambdas: np.ndarray
    kappas: np.ndarray
    tilde: list
    symbols: list
    estimates: np.ndarray
    oracle: np.ndarray | None
    undetermined_selections: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n_events(self) -> int:
        return len(self.lambdas) - 1

    @property
    def errors(self) -> np.ndarray | None:
        """Largest per-symbol gap between estimate and oracle, per event."""
        if self.oracle is None:
            return None
        return np.abs(self.estimates - self.oracle).max(axis=1)

    def final_decile(self) -> slice:
        R = self.n_events
        return slice(int(math.floor(0.9 * R)), R)


def _estimates(successors: list, n_events: int, symbols: list) -> np.ndarray:
    pos = {s: i for i, s in enumerate(symbols)}
    onehot = np.zeros((n_events, len(symbols)))
    idx = [pos.get(s, -1) for s in successors[:n_events]]
    for r, i in enumerate(idx):
        if i >= 0:
            onehot[r, i] = 1.0
    cum = np.cumsum(onehot, axis=0)
    return cum / np.arange(1, n_events + 1)[:, None]


def oracle_laws(oracle: Oracle, path, times, symbols) -> np.ndarray | None:
    """True law of ``X_{t+1}`` given ``X_0..X_t`` for each time, on ``symbols``."""
    times = np.asarray(times, dtype=np.int64)
    if oracle.kind == "countable_iid":
        row = np.array([oracle.symbol_probability(s) for s in symbols])
        return np.tile(row, (len(times), 1))
    try:
        laws = oracle.conditional_laws(path, times)
    except UnsupportedSpecError:
        return None
    return laws[:, symbols] if len(symbols) != laws.shape[1] else laws


def run_replication(config: ExperimentConfig, r: int, *, check_invariants: bool = False,
                    path=None) -> Replication:
    """Replication ``r`` of ``config``; ``path`` overrides simulation."""
    seed = replication_seed(config.seed, r)
    if path is None:
        if config.process is None:
            raise ValueError("no process to simulate and no path given")
        spec = config.process.with_seed(seed)
        path = generate(spec, config.horizon)
    path = np.asarray(path, dtype=np.int64)
    pred = OnlinePredictor(config.params, check_invariants=check_invariants)
    pred.feed(path.tolist())
    lambdas = np.array(pred.lambdas)
    R = len(lambdas) - 1
    oracle = Oracle(config.process) if config.process is not None else None
    if oracle is not None and oracle.A is not None:
        symbols = list(range(oracle.A))
    else:
        symbols = sorted(set(pred.successors))
    est = _estimates(pred.successors, R, symbols)
    laws = oracle_laws(oracle, path, lambdas[1:], symbols) if R and oracle is not None else None
    return Replication(r, seed, path, np.array(pred.zetas), lambdas, np.array(pred.kappas),
                       list(pred.tilde), symbols, est, laws, pred.undetermined_selections)


def run_replications(config: ExperimentConfig, workers: int = 1, **kw) -> list[Replication]:
    """All replications, in replication order.  ``workers > 1`` uses processes."""
    if workers <= 1 or config.replications == 1:
        return [run_replication(config, r, **kw) for r in range(config.replications)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(run_replication, config, r, **kw) for r in range(config.replications)]
        return [f.result() for f in futs]


# -- traces -----------------------------------------------------------------

def trace_header(rep: Replication) -> list[str]:
    cols = ["replication", "r", "lambda", "kappa"]
    cols += [f"f_{s}" for s in rep.symbols]
    if rep.oracle is not None:
        cols += [f"oracle_{s}" for s in rep.symbols] + ["abs_error"]
    cols.append("lambda_over_r")
    return cols


def trace_rows(rep: Replication, stride: int = 1):
    """One row per stopping time ``r >= 1`` (every ``stride``-th, plus the last)."""
    errs = rep.errors
    R = rep.n_events
    for i in range(R):
        r = i + 1
        if stride > 1 and r % stride and r != R:
            continue
        lam = int(rep.lambdas[r])
        row = [rep.index, r, lam, int(rep.kappas[i])]
        row += [float(v) for v in rep.estimates[i]]
        if rep.oracle is not None:
            row += [float(v) for v in rep.oracle[i]] + [float(errs[i])]
        row.append(lam / r)
        yield row


# -- summaries --------------------------------------------------------------

def settle_time(lambdas) -> int | None:
    """Last event index ``n`` with ``lambda_n - lambda_{n-1} != 1`` (0 if none)."""
    d = np.diff(np.asarray(lambdas))
    bad = np.flatnonzero(d != 1)
    return int(bad[-1] + 1) if len(bad) else 0


def expected_ratio(oracle: Oracle, tilde: list) -> tuple[float | None, float | None]:
    """``(K, 1/P(last K reconstructed symbols))`` for finite memory, else ``(inf, None)``."""
    if oracle.kind == "hidden_markov":
        K = oracle.memory_length(())
        if K == math.inf:
            return math.inf, None
    need = oracle.m if oracle.kind == "markov" else 0
    if len(tilde) < need:
        return None, None
    block = tuple(reversed(tilde[:need]))
    K = oracle.memory_length(block)
    if K == math.inf:
        return K, None
    ctx = tuple(reversed(tilde[:K]))
    return K, 1.0 / oracle.block_probability(ctx)


def summarize(rep: Replication, oracle: Oracle | None = None) -> dict:
    """Final-decile statistics of one replication."""
    R = rep.n_events
    out = {"replication": rep.index, "seed": rep.seed, "events": R,
           "zetas": len(rep.zetas) - 1}
    if R == 0:
        return out
    dec = rep.final_decile()
    kap = rep.kappas[dec]
    out["kappa_terminal"] = int(rep.kappas[-1])
    out["kappa_decile_min"] = int(kap.min())
    out["kappa_decile_max"] = int(kap.max())
    out["ratio_terminal"] = float(rep.lambdas[-1]) / R
    out["settle_event"] = settle_time(rep.lambdas)
    out["settle_time"] = int(rep.lambdas[out["settle_event"]])
    errs = rep.errors
    if errs is not None:
        out["error_decile_mean"] = float(errs[dec].mean())
        out["error_decile_max"] = float(errs[dec].max())
    if oracle is not None and oracle.kind != "countable_iid":
        K, ratio = expected_ratio(oracle, rep.tilde)
        out["memory"] = K
        out["ratio_expected"] = ratio
    elif oracle is not None:
        out["memory"] = 0
        out["ratio_expected"] = 1.0
    return out
