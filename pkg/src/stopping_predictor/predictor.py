"""Online estimation along stopping times.

At every time ``t`` the predictor

1. checks whether the block ending at the last auxiliary stopping time
   ``zeta`` has recurred (completing the next ``zeta``),
2. updates the two-half block index,
3. computes the memory estimate ``chi_t``: the smallest ``k`` whose deviation
   statistic is at most ``t**-beta``,
4. tests whether the last ``chi_t`` symbols match the block ending at the
   current ``zeta_j``; if so ``t`` is the next stopping time ``lambda`` and
   ``kappa = chi_t``.

The estimate after ``r`` stopping times is the empirical law of the symbols
right after ``lambda_0, ..., lambda_{r-1}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .block_index import TwoHalfIndex
from .core import (EstimatorParams, PendingError, ScheduleHorizonError, TargetFunction,
                   validate_params)

log = logging.getLogger(__name__)


class InvariantError(AssertionError):
    """An internal consistency guarantee of the estimator failed."""


class _NeedLonger(Exception):
    def __init__(self, length):
        self.length = length


@dataclass(frozen=True)
class Estimate:
    """Empirical law of the ``n`` symbols that followed the first ``n``
    stopping times, stored as exact counts."""

    counts: tuple  # ((symbol, count), ...) sorted by symbol
    n: int

    @classmethod
    def from_counts(cls, counts: dict, n: int) -> "Estimate":
        return cls(tuple(sorted((s, c) for s, c in counts.items() if c)), n)

    def proba(self, z: int) -> float:
        for s, c in self.counts:
            if s == z:
                return c / self.n
        return 0.0

    def as_dict(self) -> dict:
        return {s: c / self.n for s, c in self.counts}

    def fractions(self) -> dict:
        return {s: Fraction(c, self.n) for s, c in self.counts}

    def mean(self, f: TargetFunction) -> float:
        return sum(c * f(s) for s, c in self.counts) / self.n


@dataclass(frozen=True)
class ZetaCompleted:
    index: int
    time: int


@dataclass(frozen=True)
class LambdaCompleted:
    index: int
    time: int
    kappa: int
    estimate: Estimate
    value: float | None = None  # mean of the scalar target, when one is set


class OnlinePredictor:
    """Strictly online estimator state.

    Feed symbols with :meth:`step` (returns events) or :meth:`feed` (no
    events).  Nothing recorded ever changes after it has been recorded.

    Attributes
    ----------
    zetas : list[int]
        Auxiliary stopping times found so far, ``zetas[0] = 0``.
    lambdas : list[int]
        Estimation stopping times, ``lambdas[0] = 0``.
    kappas : list[int]
        ``kappas[r-1]`` is the memory estimate at ``lambdas[r]``.
    chis : list[int]
        ``chis[t]`` is the memory estimate computed at time ``t``.
    tilde : list[int]
        ``tilde[i]`` is the reconstructed past symbol at lag ``i`` (the
        ``X~_{-i}`` process), materialized as far as the data determines it.
    successors : list[int]
        ``successors[j]`` is the symbol right after ``lambdas[j]``.
    """

    def __init__(self, params: EstimatorParams | None = None, *, max_len: int = 8,
                 check_invariants: bool = False):
        params = params if params is not None else EstimatorParams()
        validate_params(params)
        self.params = params
        self.schedule = params.schedule
        self.beta = params.beta
        self.gamma = params.gamma
        self.check_invariants = check_invariants
        self.lset = TwoHalfIndex(params.gamma, max_len)
        self.path = self.lset.path
        self.zetas = [0]
        self.lambdas = [0]
        self.kappas: list[int] = []
        self.chis: list[int] = []
        self.tilde: list[int] = []
        self.successors: list[int] = []
        self.undetermined_selections = 0
        self._j = 0
        self._block_len = self.schedule(1)
        self._succ_counts: dict = {}

    # -- feeding -----------------------------------------------------------

    @property
    def n(self) -> int:
        """Index of the last observed symbol (``-1`` before any data)."""
        return len(self.path) - 1

    def feed(self, symbols: Iterable[int]) -> None:
        for s in symbols:
            self._advance(s)

    def step(self, symbol: int) -> list:
        zeta_done, lambda_done = self._advance(symbol)
        events = []
        if zeta_done:
            events.append(ZetaCompleted(len(self.zetas) - 1, self.zetas[-1]))
        if lambda_done:
            r = len(self.lambdas) - 1
            est = self.estimate(r)
            value = est.mean(self.params.target) if self.params.target is not None else None
            events.append(LambdaCompleted(r, self.lambdas[r], self.kappas[r - 1], est, value))
        return events

    def _advance(self, symbol: int):
        symbol = int(symbol)
        if symbol < 0:
            raise ValueError(f"symbols must be nonnegative, got {symbol}")
        path = self.path
        t = len(path)
        self.lset.append(symbol)

        zeta_done = False
        if t > 0:
            z = self.zetas[-1]
            l = self._block_len
            if path[t] == path[z] and path[t - l + 1:t + 1] == path[z - l + 1:z + 1]:
                self.zetas.append(t)
                zeta_done = True
                self._block_len = self.schedule(len(self.zetas))
                self._materialize_tilde()

        if t == self.lambdas[-1] + 1:
            self.successors.append(symbol)
            self._succ_counts[symbol] = self._succ_counts.get(symbol, 0) + 1
            if self.params.target is not None:
                self.params.target(symbol)  # bound check

        if t == 0:
            self.chis.append(0)
            return zeta_done, False

        chi = self._chi_at(t)
        self.chis.append(chi)
        if self.check_invariants:
            self._check_chi_bound(t, chi)

        zetas = self.zetas
        j = self._j
        zj = zetas[j]
        if chi == 0 or path[t - chi + 1:t + 1] == path[zj - chi + 1:zj + 1]:
            self.lambdas.append(t)
            self.kappas.append(chi)
            if j + 1 < len(zetas) and t > zetas[j + 1]:
                raise InvariantError(f"lambda={t} passed zeta_{j + 1}={zetas[j + 1]}")
            while j + 1 < len(zetas) and zetas[j + 1] <= t:
                j += 1
            self._j = j
            if self.check_invariants:
                self._check_suffix_match()
            return zeta_done, True
        if j + 1 < len(zetas) and zetas[j + 1] <= t:
            raise InvariantError(f"no stopping time found by zeta_{j + 1}={zetas[j + 1]}")
        return zeta_done, False

    def _materialize_tilde(self) -> None:
        m = len(self.zetas) - 1
        tilde = self.tilde
        sched = self.schedule
        i = len(tilde)
        while True:
            try:
                jj = sched.J(i)
            except ScheduleHorizonError:
                break
            if jj > m:
                break
            tilde.append(self.path[self.zetas[jj] - i])
            i += 1

    # -- memory estimate ---------------------------------------------------

    def _cutoff(self, n: int, k: int) -> bool:
        jj = self.schedule.J(k)
        return jj < len(self.zetas) and self.zetas[jj] <= (n + 1) // 2 - 1

    def _chi_at(self, n: int) -> int:
        thr = float(n) ** (-self.beta)
        for k in range(n):
            if not self._cutoff(n, k):
                if k > 0:
                    self.undetermined_selections += 1
                    log.debug("chi_%d = %d selected by cutoff (context not determined)", n, k)
                return k
            if self._delta(n, k, stop_above=thr) <= thr:
                return k
        raise InvariantError(f"no memory estimate below threshold at n={n}")  # pragma: no cover

    def _delta(self, n: int, k: int, stop_above: float | None = None) -> float:
        """Deviation statistic at the current time ``n`` for depth ``k``,
        assuming the cutoff holds.  With ``stop_above`` set, returns as soon
        as some candidate exceeds it."""
        while True:
            try:
                return self._delta_search(n, k, stop_above)
            except _NeedLonger as e:
                self.lset.ensure_len(e.length)

    def _delta_search(self, n: int, k: int, stop_above: float | None) -> float:
        lset = self.lset
        if lset.max_len < k + 2:
            raise _NeedLonger(k + 2)
        idx = lset.index
        children = idx._children
        count = idx._count
        first_end = idx._first_end
        tilde = self.tilde
        h = (n + 1) // 2
        last_first = h - 1
        room = n - h + 1  # longest block fitting in the second half
        thr2 = float(n) ** (1.0 - self.gamma)
        max_len = idx.max_len

        node_c = 0
        for i in range(k):
            node_c = children[node_c].get(tilde[i])
            if node_c is None:
                return 0.0
        row_n = idx._rows[n]
        den_c = count[node_c]
        if k and k <= room and row_n[k - 1] == node_c:
            den_c -= 1

        ext = []
        for x, nd in children[0].items():
            if count[nd] <= thr2:
                continue
            for i in range(k):
                nd = children[nd].get(tilde[i])
                if nd is None:
                    break
            else:
                if count[nd] > thr2 and first_end[nd] <= last_first:
                    ext.append((nd, count[nd] / den_c))
        if not ext:
            return 0.0

        best = 0.0
        stack = [(node_c, k, ext)]
        while stack:
            nzc, m, ext = stack.pop()
            for a, child in children[nzc].items():
                nxt = []
                for nd, base in ext:
                    c2 = children[nd].get(a)
                    if c2 is not None and count[c2] > thr2 and first_end[c2] <= last_first:
                        nxt.append((c2, base))
                if not nxt:
                    continue
                den = count[child]
                if m + 1 <= room and row_n[m] == child:
                    den -= 1
                for c2, base in nxt:
                    d = abs(base - count[c2] / den)
                    if d > best:
                        best = d
                        if stop_above is not None and d > stop_above:
                            return d
                if m + 3 > max_len:
                    raise _NeedLonger(m + 3)
                stack.append((child, m + 1, nxt))
        return best

    # -- spec-level queries --------------------------------------------------

    def delta_hat(self, k: int) -> float:
        """Deviation statistic for depth ``k`` at the current time."""
        n = self.n
        if not 0 <= k < n:
            raise ValueError(f"delta_hat needs 0 <= k < n, got k={k}, n={n}")
        if not self._cutoff(n, k):
            return 0.0
        return self._delta(n, k)

    def chi(self) -> int:
        """Memory estimate at the current time, evaluated afresh."""
        n = self.n
        if n < 1:
            return 0
        return self._chi_at(n)

    def tilde_x(self, i: int) -> int:
        if i < len(self.tilde):
            return self.tilde[i]
        raise PendingError(f"X~_-{i} needs zeta_{self.schedule.J(i)}, not yet observed")

    def tilde_block(self, k: int) -> tuple:
        """``(X~_{-k+1}, ..., X~_0)``."""
        if k > len(self.tilde):
            raise PendingError(f"only {len(self.tilde)} reconstructed symbols available")
        return tuple(reversed(self.tilde[:k]))

    def kappa(self, r: int) -> int:
        return self.kappas[r - 1]

    def estimate(self, r: int | None = None) -> Estimate | None:
        """Estimate after ``r`` stopping times (default: all completed)."""
        if r is None:
            r = len(self.lambdas) - 1
        if r == 0:
            return None
        if r > len(self.successors):
            raise PendingError(f"successor of lambda_{r - 1} not yet observed")
        if r == len(self.successors):
            return Estimate.from_counts(self._succ_counts, r)
        counts: dict = {}
        for s in self.successors[:r]:
            counts[s] = counts.get(s, 0) + 1
        return Estimate.from_counts(counts, r)

    # -- invariants --------------------------------------------------------

    def _check_chi_bound(self, n: int, chi: int) -> None:
        last = (n + 1) // 2 - 1
        zetas = self.zetas
        j = 0
        while j + 1 < len(zetas) and zetas[j + 1] <= last:
            j += 1
        bound = self.schedule(j + 1)
        if chi > bound:
            raise InvariantError(f"chi_{n}={chi} exceeds l_{j + 1}={bound}")

    def _check_suffix_match(self) -> None:
        t = self.lambdas[-1]
        kap = self.kappas[-1]
        if kap and tuple(self.path[t - kap + 1:t + 1]) != self.tilde_block(kap):
            raise InvariantError(f"suffix of lambda={t} does not match X~ over {kap} symbols")


@dataclass
class PredictorResult:
    zetas: list
    lambdas: list
    kappas: list
    chis: list
    successors: list
    tilde: list

    def estimate(self, r: int) -> Estimate:
        counts: dict = {}
        for s in self.successors[:r]:
            counts[s] = counts.get(s, 0) + 1
        return Estimate.from_counts(counts, r)


def run_predictor(path: Iterable[int], params: EstimatorParams | None = None,
                  **kwargs) -> PredictorResult:
    p = OnlinePredictor(params, **kwargs)
    p.feed(path)
    return PredictorResult(list(p.zetas), list(p.lambdas), list(p.kappas), list(p.chis),
                           list(p.successors), list(p.tilde))
