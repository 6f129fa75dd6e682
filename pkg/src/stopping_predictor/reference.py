"""Slow, literal implementations used as equivalence oracles.

Nothing here shares counting code with the optimized predictor.  Every
count is a fresh scan of the path, every ``J(n)`` a fresh scan of the
schedule.  Quadratic or worse by design; paths are capped at ``cap``
symbols.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import EstimatorParams, PendingError, Schedule, validate_params
from .processes import Oracle, generate

DEFAULT_CAP = 2000


class CapExceededError(ValueError):
    """The path is longer than the reference is willing to process."""


def naive_J(schedule: Schedule, n: int) -> int:
    j = 1
    while schedule(j + 1) <= n:
        j += 1
    return j


def naive_zetas(path, schedule: Schedule) -> list[int]:
    """All auxiliary stopping times that occur inside ``path``."""
    path = list(path)
    zetas = [0]
    while True:
        z = zetas[-1]
        l = schedule(len(zetas))
        block = path[z - l + 1:z + 1]
        for t in range(z + 1, len(path)):
            if path[t - l + 1:t + 1] == block:
                zetas.append(t)
                break
        else:
            return zetas


def naive_tilde(path, zetas, schedule: Schedule, i: int) -> int:
    j = naive_J(schedule, i)
    if j >= len(zetas):
        raise PendingError(f"zeta_{j} not observed")
    return path[zetas[j] - i]


def count_ending(path, p, lo: int, hi: int) -> int:
    """``#{lo <= t <= hi : t-len(p)+1 >= 0 and path[t-len(p)+1..t] == p}``."""
    p = list(p)
    m = len(p)
    total = 0
    for t in range(max(lo, m - 1), min(hi, len(path) - 1) + 1):
        if path[t - m + 1:t + 1] == p:
            total += 1
    return total


class _BlockCounts:
    """Counts of every length-``m`` block of one text, tabulated per length
    on first use."""

    def __init__(self, text: str):
        self.text = text
        self._by_len: dict[int, Counter] = {}

    def __call__(self, w: str) -> int:
        m = len(w)
        if m == 0:
            return len(self.text) + 1
        table = self._by_len.get(m)
        if table is None:
            t = self.text
            table = self._by_len[m] = Counter(t[s:s + m] for s in range(len(t) - m + 1))
        return table[w]


def _context(path, zetas, schedule, k):
    return tuple(naive_tilde(path, zetas, schedule, i) for i in range(k - 1, -1, -1))


def naive_delta_hat(path, n: int, k: int, params: EstimatorParams, zetas=None,
                    _counts=None) -> float:
    """Deviation statistic at time ``n`` for depth ``k`` from ``path[:n+1]``.

    Blocks are handled as strings of code points.  Candidates of extension
    length ``i`` are built by prefixing one symbol to the candidates of
    length ``i-1``: a block that occurs in the first half, or often in the
    second half, has every suffix doing the same.
    """
    path = list(path[:n + 1])
    if not 0 <= k < n:
        raise ValueError("need 0 <= k < n")
    sched = params.schedule
    if zetas is None:
        zetas = naive_zetas(path, sched)
    zetas = [z for z in zetas if z <= n]
    h = (n + 1) // 2
    j = naive_J(sched, k)
    if j >= len(zetas) or zetas[j] > h - 1:
        return 0.0
    text = "".join(map(chr, path))
    first = text[:h]            # X_0 .. X_{h-1}
    if _counts is None:
        _counts = _half_counts(text, n)
    second, second_den = _counts
    alphabet = sorted(set(text))
    c = "".join(map(chr, _context(path, zetas, sched, k)))
    thr = float(n) ** (1.0 - params.gamma)
    den_c = second_den(c) if k else n - h + 1
    level = [c + x for x in alphabet]   # (c, x) with an empty prefix z
    best = 0.0
    for i in range(1, n + 1):
        level = [a + w for w in level for a in alphabet]
        level = [w for w in level if w in first and second(w) > thr]
        if not level:
            break
        for w in level:
            zc, x = w[:-1], w[-1]
            den_zc = second_den(zc)
            if den_c == 0 or den_zc == 0:
                continue
            d = abs(second(c + x) / den_c - second(w) / den_zc)
            if d > best:
                best = d
    return best


def _half_counts(text: str, n: int):
    h = (n + 1) // 2
    # occurrences inside X_h..X_n, and inside X_h..X_{n-1}
    return _BlockCounts(text[h:n + 1]), _BlockCounts(text[h:n])


def naive_chi(path, n: int, params: EstimatorParams, zetas=None,
              deltas: dict | None = None) -> int:
    if n < 1:
        return 0
    path = list(path[:n + 1])
    if zetas is None:
        zetas = naive_zetas(path, params.schedule)
    counts = _half_counts("".join(map(chr, path)), n)
    thr = float(n) ** (-params.beta)
    for k in range(n):
        d = naive_delta_hat(path, n, k, params, zetas, _counts=counts)
        if deltas is not None:
            deltas[(n, k)] = d
        if d <= thr:
            return k
    raise AssertionError("no admissible depth")  # pragma: no cover


@dataclass
class NaiveResult:
    zetas: list
    lambdas: list
    kappas: list
    chis: list
    successors: list
    delta_hat: dict = field(default_factory=dict)

    def estimate(self, r: int) -> dict:
        """``{symbol: count}`` over the successors of the first ``r`` stopping times."""
        return dict(Counter(self.successors[:r]))


def naive_full_run(path, params: EstimatorParams | None = None, cap: int = DEFAULT_CAP,
                   record_deltas: bool = False) -> NaiveResult:
    params = params if params is not None else EstimatorParams()
    validate_params(params)
    path = [int(v) for v in path]
    if len(path) > cap:
        raise CapExceededError(f"path length {len(path)} exceeds cap {cap}")
    sched = params.schedule
    # a zeta <= n is decided by X_0..X_n, so one scan of the whole path serves every n
    zetas = naive_zetas(path, sched)
    deltas = {} if record_deltas else None
    chis = [0] + [naive_chi(path, t, params, zetas, deltas) for t in range(1, len(path))]
    lambdas, kappas = [0], []
    for t in range(1, len(path)):
        prev = lambdas[-1]
        j = max(i for i, z in enumerate(zetas) if z <= prev)
        chi = chis[t]
        zj = zetas[j]
        if path[t - chi + 1:t + 1] == path[zj - chi + 1:zj + 1]:
            lambdas.append(t)
            kappas.append(chi)
    successors = [path[lam + 1] for lam in lambdas if lam + 1 < len(path)]
    return NaiveResult(zetas, lambdas, kappas, chis, successors, deltas or {})


# -- reversed stopping times ----------------------------------------------------

def hat_zeta(history, k: int, schedule: Schedule) -> int:
    """Backward stopping time reached after ``k`` backward recurrences.

    ``history`` lists ``x_{-m}, ..., x_0`` in time order (its last element
    sits at time 0).  Returns a time ``<= 0``.
    """
    hist = list(history)
    origin = len(hist) - 1

    def at(s, e):  # x_s..x_e for s <= e <= 0
        return hist[origin + s:origin + e + 1]

    z = 0
    for i in range(1, k + 1):
        l = schedule(k - i + 1)
        if origin + z - l + 1 < 0:
            raise PendingError("history too short for the current block")
        block = at(z - l + 1, z)
        t = 1
        while True:
            if origin + z - l + 1 - t < 0:
                raise PendingError(f"no backward recurrence within history at step {i}")
            if at(z - l + 1 - t, z - t) == block:
                break
            t += 1
        z -= t
    return z


# -- distributional self-test -------------------------------------------------------

@dataclass(frozen=True)
class GoodnessOfFit:
    statistic: float
    df: int
    critical: float
    counts: dict

    @property
    def passed(self) -> bool:
        return self.statistic <= self.critical


def extract_tilde_block(spec, m: int, schedule: Schedule, start_len: int = 64,
                        max_len: int = 1 << 16) -> tuple:
    """``(X~_{-m+1}, ..., X~_0)`` from one simulated path."""
    need = naive_J(schedule, max(m - 1, 0))
    length = start_len
    while True:
        path = generate(spec, length).tolist()
        zetas = naive_zetas(path, schedule)
        if len(zetas) > need:
            return tuple(naive_tilde(path, zetas, schedule, i) for i in range(m - 1, -1, -1))
        if length >= max_len:
            raise PendingError(f"zeta_{need} not found within {max_len} symbols")
        length *= 2


def tilde_distribution_check(spec, m: int, runs: int, schedule: Schedule | None = None,
                             level: float = 0.999) -> GoodnessOfFit:
    """Pearson chi-square of the simulated law of the last ``m`` reconstructed
    symbols against the stationary law of ``m``-blocks.  Run ``r`` uses the
    seed ``(spec.seed, r)``."""
    if not 1 <= m <= 4:
        raise ValueError("m must lie in 1..4")
    schedule = schedule if schedule is not None else Schedule.identity()
    oracle = Oracle(spec)
    if oracle.A is None:
        raise ValueError("needs a finite alphabet")
    counts = Counter()
    seeds = np.random.SeedSequence(spec.seed).spawn(runs)
    for r in range(runs):
        sub = spec.with_seed(int(seeds[r].generate_state(1, np.uint64)[0]))
        counts[extract_tilde_block(sub, m, schedule)] += 1
    stat = 0.0
    cells = 0
    for block in itertools.product(range(oracle.A), repeat=m):
        p = oracle.block_probability(block)
        if p <= 0:
            if counts.get(block):
                stat = float("inf")
            continue
        cells += 1
        e = runs * p
        stat += (counts.get(block, 0) - e) ** 2 / e
    df = cells - 1
    if df == 0:
        return GoodnessOfFit(0.0 if stat != float("inf") else stat, 0, 0.0, dict(counts))
    return GoodnessOfFit(stat, df, float(stats.chi2.ppf(level, df)), dict(counts))
