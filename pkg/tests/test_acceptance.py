"""Acceptance gate.  Each test prints one PASS/FAIL line in the terminal
summary; all tolerances and replication counts are fixed here."""

import math
import time

import numpy as np
import pytest

from stopping_predictor.block_index import TwoHalfIndex
from stopping_predictor.core import EstimatorParams, Schedule
from stopping_predictor.experiments import (ExperimentConfig, expected_ratio, run_replication,
                                            settle_time)
from stopping_predictor.predictor import OnlinePredictor
from stopping_predictor.processes import Oracle, ProcessSpec, generate
from stopping_predictor.reference import naive_full_run, tilde_distribution_check

from random_paths import random_case

pytestmark = pytest.mark.slow

HORIZON = 100_000
REPS = 50
MASTER_SEED = 2024

M1 = ProcessSpec.markov([[0.9, 0.1], [0.2, 0.8]], order=1)
M2 = ProcessSpec.markov([[0.8, 0.2], [0.3, 0.7], [0.2, 0.8], [0.7, 0.3]], order=2)
COIN = ProcessSpec.iid([0.5, 0.5])
HMM = ProcessSpec.hidden_markov([[0.7, 0.3], [0.3, 0.7]], [[0.85, 0.15], [0.15, 0.85]])
PARAMS = EstimatorParams(beta=0.3, gamma=0.3, schedule=Schedule.identity())
LOG_PARAMS = EstimatorParams(beta=0.3, gamma=0.3,
                             schedule=Schedule.logarithmic(delta=1.0, eps1=0.5, eps2=0.25))


def _replications(spec, params=PARAMS, reps=REPS, horizon=HORIZON):
    cfg = ExperimentConfig(spec, params, horizon, reps, MASTER_SEED)
    out, times = [], []
    for r in range(reps):
        t0 = time.perf_counter()
        out.append(run_replication(cfg, r, check_invariants=True))
        times.append(time.perf_counter() - t0)
    return out, times


@pytest.fixture(scope="module")
def m1_runs():
    return _replications(M1)


@pytest.fixture(scope="module")
def m2_runs():
    return _replications(M2)


@pytest.fixture(scope="module")
def coin_runs():
    return _replications(COIN)


@pytest.fixture(scope="module")
def hmm_runs():
    return _replications(HMM)


def _share(flags):
    return sum(flags) / len(flags)


# -- 1 ----------------------------------------------------------------------------

def test_c1_oracle_equivalence(acceptance_log):
    t0 = time.perf_counter()
    mismatches = []
    chi_max = 0
    for seed in range(1000):
        path, params = random_case(seed)
        p = OnlinePredictor(params)
        p.feed(path)
        ref = naive_full_run(path, params)
        same = (p.zetas == ref.zetas and p.lambdas == ref.lambdas and p.kappas == ref.kappas
                and p.chis == ref.chis and p.successors == ref.successors)
        r = len(p.successors)
        if same and r:
            same = dict(p.estimate(r).counts) == ref.estimate(r)
        if not same:
            mismatches.append(seed)
        chi_max = max(chi_max, max(p.chis))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 300
    acceptance_log.append(("C1 oracle equivalence", ok,
                           f"1000 paths, {len(mismatches)} mismatches, max chi {chi_max}, "
                           f"{elapsed:.0f}s (target < 300s)"))
    assert not mismatches, mismatches[:10]
    assert elapsed < 300


# -- 2 ----------------------------------------------------------------------------

def test_c2_memory_recovery(acceptance_log, m1_runs, m2_runs):
    def recovered(runs, K):
        return [bool(np.all(rep.kappas[rep.final_decile()] == K)) for rep in runs]

    s1 = _share(recovered(m1_runs[0], 1))
    s2 = _share(recovered(m2_runs[0], 2))
    ok = s1 >= 0.95 and s2 >= 0.95
    acceptance_log.append(("C2 memory recovery", ok,
                           f"final-decile kappa == K in {s1:.0%} (order 1) and {s2:.0%} "
                           f"(order 2) of {REPS} runs (need >= 95%)"))
    assert s1 >= 0.95 and s2 >= 0.95


# -- 3 ----------------------------------------------------------------------------

def test_c3_iid_degeneracy(acceptance_log, coin_runs):
    settle = [int(rep.lambdas[settle_time(rep.lambdas)]) for rep in coin_runs[0]]
    share = _share([s < HORIZON / 2 for s in settle])
    ok = share >= 0.95
    acceptance_log.append(("C3 iid degeneracy", ok,
                           f"unit increments from before horizon/2 in {share:.0%} of {REPS} "
                           f"runs (need >= 95%); latest settle time {max(settle)}"))
    assert ok


# -- 4 ----------------------------------------------------------------------------

def test_c4_ratio_limit(acceptance_log, m1_runs):
    oracle = Oracle(M1)
    good, gaps = [], []
    for rep in m1_runs[0]:
        _, expected = expected_ratio(oracle, rep.tilde)
        ratio = rep.lambdas[-1] / rep.n_events
        gaps.append(abs(ratio / expected - 1))
        good.append(gaps[-1] <= 0.10)
    share = _share(good)
    ok = share >= 0.90
    acceptance_log.append(("C4 ratio limit", ok,
                           f"lambda_n/n within 10% of 1/P(X~_0) in {share:.0%} of {REPS} runs "
                           f"(need >= 90%); median relative gap {np.median(gaps):.3f}"))
    assert ok


# -- 5 ----------------------------------------------------------------------------

def test_c5_prediction_consistency(acceptance_log, m1_runs, hmm_runs):
    def decile_errors(runs):
        return [float(rep.errors[rep.final_decile()].mean()) for rep in runs]

    e1 = decile_errors(m1_runs[0])
    eh = decile_errors(hmm_runs[0])
    s1 = _share([e < 0.05 for e in e1])
    sh = _share([e < 0.08 for e in eh])
    ok = s1 >= 0.90 and sh >= 0.90
    acceptance_log.append(("C5 prediction consistency", ok,
                           f"order 1: error < 0.05 in {s1:.0%} (median {np.median(e1):.4f}); "
                           f"hidden Markov: error < 0.08 in {sh:.0%} (median "
                           f"{np.median(eh):.4f}); need >= 90% of {REPS} runs"))
    assert ok


# -- 6 ----------------------------------------------------------------------------

def test_c6_polynomial_growth(acceptance_log):
    H = Oracle(M1).entropy_rate()
    exponent = 12 * (H + 0.5)
    runs, _ = _replications(M1, LOG_PARAMS, reps=10)
    thresholds, tail_max, ok = [], [], True
    for rep in runs:
        R = rep.n_events
        n = np.arange(100, R + 1)
        lam = rep.lambdas[100:R + 1].astype(float)
        growth = np.log(lam) / np.log(n)
        bad = np.flatnonzero(growth >= exponent)
        threshold = int(n[bad[-1]] + 1) if len(bad) else 100
        thresholds.append(threshold)
        tail = growth[n >= max(threshold, R // 2)]
        tail_max.append(float(tail.max()))
        ok &= threshold < R and tail_max[-1] < exponent
    acceptance_log.append(("C6 polynomial growth", ok,
                           f"log schedule, exponent 12(H+0.5) = {exponent:.3f}; thresholds "
                           f"{sorted(set(thresholds))}; max tail log(lambda)/log(n) "
                           f"{max(tail_max):.3f} over 10 runs"))
    assert ok


# -- 7 ----------------------------------------------------------------------------

def test_c7_distributional_self_test(acceptance_log):
    results = []
    for name, spec in (("iid", COIN.with_seed(71)), ("order 1", M1.with_seed(72))):
        for m in (1, 2, 3):
            g = tilde_distribution_check(spec, m, 10_000, level=0.999)
            results.append((name, m, g))
    ok = all(g.passed for *_, g in results)
    detail = "; ".join(f"{n} m={m}: {g.statistic:.2f} <= {g.critical:.2f}"
                       if g.passed else f"{n} m={m}: {g.statistic:.2f} > {g.critical:.2f}"
                       for n, m, g in results)
    acceptance_log.append(("C7 distributional self-test", ok, f"10^4 runs each; {detail}"))
    assert ok


# -- 8 ----------------------------------------------------------------------------

def _scan_inside(path, n, p):
    h = -(-n // 2)
    m = len(p)
    return sum(1 for t in range(h + m - 1, n + 1) if tuple(path[t - m + 1:t + 1]) == p)


def _invariant_failures(p):
    """Independent re-check of a finished predictor run; returns messages."""
    fails = []
    z, lam, path = p.zetas, p.lambdas, p.path
    if any(a >= b for a, b in zip(z, z[1:])):
        fails.append("zeta not increasing")
    if any(a >= b for a, b in zip(lam, lam[1:])):
        fails.append("lambda not increasing")
    zi = np.asarray(z)
    for r in range(1, len(lam)):
        j = int(np.searchsorted(zi, lam[r - 1], side="right")) - 1
        if not (z[j] <= lam[r - 1] < lam[r]) or (j + 1 < len(z) and lam[r] > z[j + 1]):
            fails.append(f"interleaving at r={r}")
            break
        kap = p.kappas[r - 1]
        if kap and tuple(path[lam[r] - kap + 1:lam[r] + 1]) != tuple(reversed(p.tilde[:kap])):
            fails.append(f"suffix match at r={r}")
            break
    for n in range(1, len(path)):
        j = int(np.searchsorted(zi, -(-n // 2) - 1, side="right")) - 1
        if p.chis[n] > p.schedule(max(j, 0) + 1):
            fails.append(f"chi bound at n={n}")
            break
    for r in (1, len(p.successors) // 2, len(p.successors)):
        if r and sum(p.estimate(r).fractions().values()) != 1:
            fails.append(f"estimate normalization at r={r}")
    # index state at the end of the run against a literal recount
    n = p.n
    fresh = TwoHalfIndex(p.gamma)
    fresh.extend(path)
    rng = np.random.default_rng(n)
    for _ in range(40):
        m = int(rng.integers(1, 6))
        s = int(rng.integers(0, n - m + 2))
        pat = tuple(path[s:s + m])
        truth = _scan_inside(path, n, pat)
        if not (p.lset.count_second(pat) == fresh.count_second(pat) == truth):
            fails.append(f"index count for {pat}")
            break
    return fails


def test_c8_invariant_suite(acceptance_log, m1_runs, m2_runs, coin_runs, hmm_runs):
    # the 200 long runs above already ran with every built-in check enabled
    long_runs = sum(len(x[0]) for x in (m1_runs, m2_runs, coin_runs, hmm_runs))
    failures = []
    checked = 0
    for spec in (M1, M2, COIN, HMM):
        for params in (PARAMS, LOG_PARAMS):
            for seed in range(3):
                path = generate(spec.with_seed(500 + seed), 20_000).tolist()
                p = OnlinePredictor(params, check_invariants=True)
                p.feed(path)
                failures += _invariant_failures(p)
                checked += 1
    rows_ok = all(np.allclose(rep.estimates.sum(axis=1), 1.0, atol=1e-12)
                  for runs in (m1_runs, m2_runs, coin_runs, hmm_runs) for rep in runs[0])
    ok = not failures and rows_ok
    acceptance_log.append(("C8 invariant suite", ok,
                           f"{long_runs} runs at 10^5 with built-in checks, {checked} runs "
                           f"re-checked independently, {len(failures)} failures"))
    assert not failures, failures
    assert rows_ok


# -- 9 ----------------------------------------------------------------------------

def test_c9_performance(acceptance_log, m1_runs):
    cfg = ExperimentConfig(M1, PARAMS, HORIZON, 1, 99)
    t0 = time.perf_counter()
    run_replication(cfg, 0)
    fresh = time.perf_counter() - t0
    worst = max(m1_runs[1])
    ok = fresh < 60 and worst < 60
    acceptance_log.append(("C9 performance", ok,
                           f"order-1 chain, horizon 10^5: {fresh:.1f}s standalone, slowest of "
                           f"{REPS} checked runs {worst:.1f}s (limit 60s)"))
    assert ok
