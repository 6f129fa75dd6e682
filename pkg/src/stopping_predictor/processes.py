"""Seeded simulators and exact oracles for the test processes.

Four families are supported: i.i.d. over a finite alphabet, Markov chains of
any finite order, hidden Markov models with finite hidden and observed
alphabets, and a geometric i.i.d. law on the nonnegative integers (a
countably infinite alphabet).  Every process starts from its stationary law.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-10
KINDS = ("iid", "markov", "hidden_markov", "countable_iid")


class SpecError(ValueError):
    """A process description is malformed."""


class ZeroProbabilityError(ValueError):
    """The conditioning block has probability zero."""


class UnsupportedSpecError(ValueError):
    """The requested oracle quantity is not available for this process kind."""


def _rows(a) -> tuple:
    return tuple(tuple(float(v) for v in row) for row in a)


def _check_stochastic(name: str, rows) -> None:
    for i, row in enumerate(rows):
        if any(v < 0 for v in row):
            raise SpecError(f"{name} row {i} has a negative entry")
        if abs(sum(row) - 1.0) > ROW_TOL:
            raise SpecError(f"{name} row {i} sums to {sum(row)!r}, not 1")


def _stationary(P: np.ndarray) -> np.ndarray:
    S = P.shape[0]
    A = np.vstack([P.T - np.eye(S), np.ones(S)])
    if np.linalg.matrix_rank(P.T - np.eye(S), tol=1e-10) != S - 1:
        raise SpecError("transition matrix has no unique stationary law (not ergodic)")
    b = np.zeros(S + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if np.max(np.abs(pi @ P - pi)) > STATIONARY_TOL:
        raise SpecError("stationary law could not be solved to tolerance")
    return pi


@dataclass(frozen=True)
class ProcessSpec:
    """Description of a stationary process plus the seed of its sample path.

    Markov kernels have one row per context ``(x_{-m+1}, ..., x_0)`` in
    lexicographic order (first symbol most significant) and one column per
    next symbol.
    """

    kind: str
    probs: tuple = ()
    order: int = 0
    kernel: tuple = ()
    hidden: tuple = ()
    emission: tuple = ()
    p: float = 0.5
    seed: int = 0

    @classmethod
    def iid(cls, probs, seed: int = 0) -> "ProcessSpec":
        return cls("iid", probs=tuple(float(v) for v in probs), seed=seed).validated()

    @classmethod
    def markov(cls, kernel, order: int | None = None, seed: int = 0) -> "ProcessSpec":
        rows = _rows(kernel)
        if order is None:
            A = len(rows[0]) if rows else 0
            order = round(math.log(len(rows), A)) if A > 1 else 1
        return cls("markov", order=int(order), kernel=rows, seed=seed).validated()

    @classmethod
    def hidden_markov(cls, hidden, emission, seed: int = 0) -> "ProcessSpec":
        return cls("hidden_markov", hidden=_rows(hidden), emission=_rows(emission),
                   seed=seed).validated()

    @classmethod
    def countable_iid(cls, p: float, seed: int = 0) -> "ProcessSpec":
        return cls("countable_iid", p=float(p), seed=seed).validated()

    def with_seed(self, seed: int) -> "ProcessSpec":
        return replace(self, seed=int(seed))

    @property
    def alphabet_size(self) -> int | None:
        if self.kind == "iid":
            return len(self.probs)
        if self.kind == "markov":
            return len(self.kernel[0])
        if self.kind == "hidden_markov":
            return len(self.emission[0])
        return None

    def validated(self) -> "ProcessSpec":
        if self.kind not in KINDS:
            raise SpecError(f"unknown process kind {self.kind!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise SpecError("seed must be a 64-bit unsigned integer")
        if self.kind == "iid":
            if not self.probs:
                raise SpecError("iid needs at least one probability")
            _check_stochastic("probs", [self.probs])
        elif self.kind == "markov":
            if self.order < 1:
                raise SpecError("markov order must be >= 1 (use iid for order 0)")
            A = len(self.kernel[0]) if self.kernel else 0
            if A < 1 or any(len(r) != A for r in self.kernel):
                raise SpecError("kernel rows must all have the alphabet size")
            if len(self.kernel) != A ** self.order:
                raise SpecError(f"order-{self.order} kernel over {A} symbols needs "
                                f"{A ** self.order} rows, got {len(self.kernel)}")
            _check_stochastic("kernel", self.kernel)
        elif self.kind == "hidden_markov":
            S = len(self.hidden)
            if S < 1 or any(len(r) != S for r in self.hidden):
                raise SpecError("hidden kernel must be square")
            if len(self.emission) != S:
                raise SpecError("emission needs one row per hidden state")
            A = len(self.emission[0])
            if any(len(r) != A for r in self.emission):
                raise SpecError("emission rows must all have the alphabet size")
            _check_stochastic("hidden", self.hidden)
            _check_stochastic("emission", self.emission)
        else:
            if not 0 < self.p < 1:
                raise SpecError("geometric parameter must lie in (0, 1)")
        return self

    # -- plain-text form ------------------------------------------------------

    def to_text(self) -> str:
        fmt = lambda rows: ";".join(",".join(repr(v) for v in r) for r in rows)  # noqa: E731
        lines = [f"kind={self.kind}"]
        if self.kind == "iid":
            lines.append("probs=" + ",".join(repr(v) for v in self.probs))
        elif self.kind == "markov":
            lines += [f"order={self.order}", "kernel=" + fmt(self.kernel)]
        elif self.kind == "hidden_markov":
            lines += ["hidden=" + fmt(self.hidden), "emission=" + fmt(self.emission)]
        else:
            lines.append(f"p={self.p!r}")
        lines.append(f"seed={self.seed}")
        return "\n".join(lines) + "\n"

    def to_line(self) -> str:
        return " ".join(self.to_text().split())

    @classmethod
    def from_text(cls, text: str) -> "ProcessSpec":
        kv = {}
        for item in text.replace("\n", " ").split():
            key, sep, val = item.partition("=")
            if not sep:
                raise SpecError(f"expected key=value, got {item!r}")
            kv[key.strip()] = val.strip()
        return cls.from_mapping(kv)

    @classmethod
    def from_mapping(cls, kv: dict) -> "ProcessSpec":
        parse_rows = lambda s: tuple(tuple(float(v) for v in r.split(",")) for r in s.split(";"))  # noqa: E731
        try:
            kind = kv["kind"]
            seed = int(kv.get("seed", 0))
            if kind == "iid":
                return cls.iid([float(v) for v in kv["probs"].split(",")], seed=seed)
            if kind == "markov":
                order = int(kv["order"]) if "order" in kv else None
                return cls.markov(parse_rows(kv["kernel"]), order=order, seed=seed)
            if kind == "hidden_markov":
                return cls.hidden_markov(parse_rows(kv["hidden"]), parse_rows(kv["emission"]),
                                         seed=seed)
            if kind == "countable_iid":
                return cls.countable_iid(float(kv["p"]), seed=seed)
        except KeyError as e:
            raise SpecError(f"missing field {e.args[0]!r} for process kind {kv.get('kind')!r}")
        except ValueError as e:
            if isinstance(e, SpecError):
                raise
            raise SpecError(str(e))
        raise SpecError(f"unknown process kind {kind!r}")


def _lifted(spec: ProcessSpec) -> tuple[np.ndarray, np.ndarray]:
    """Kernel array (A**m, A) and the chain on m-blocks."""
    K = np.array(spec.kernel)
    A = K.shape[1]
    m = spec.order
    S = A ** m
    P = np.zeros((S, S))
    for s in range(S):
        for y in range(A):
            P[s, (s * A) % S + y] += K[s, y]
    return K, P


def generate(spec: ProcessSpec, length: int) -> np.ndarray:
    """Seeded stationary sample path ``X_0..X_{length-1}``.  A longer path
    with the same seed extends a shorter one."""
    if length < 1:
        raise ValueError("length must be >= 1")
    spec.validated()
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "iid":
        cum = np.cumsum(spec.probs)
        cum[-1] = 1.0
        u = rng.random(length)
        return np.searchsorted(cum, u, side="right").astype(np.int64)
    if spec.kind == "countable_iid":
        return (rng.geometric(spec.p, size=length) - 1).astype(np.int64)
    if spec.kind == "markov":
        K, P = _lifted(spec)
        A, m = K.shape[1], spec.order
        pi = _stationary(P)
        cum_pi = np.cumsum(pi)
        cum_pi[-1] = 1.0
        s = int(np.searchsorted(cum_pi, rng.random(), side="right"))
        first = [int(d) for d in np.base_repr(s, A).zfill(m)] if A > 1 else [0] * m
        out = first[:length]
        u = rng.random(max(length - m, 0)).tolist()
        cum = [list(np.cumsum(row)) for row in K]
        for row in cum:
            row[-1] = 1.0
        S = A ** m
        for ui in u:
            y = bisect.bisect_right(cum[s], ui)
            out.append(y)
            s = (s * A) % S + y
        return np.array(out, dtype=np.int64)
    H = np.array(spec.hidden)
    E = np.array(spec.emission)
    pi = _stationary(H)
    cum_pi = np.cumsum(pi)
    cum_pi[-1] = 1.0
    cumH = [list(np.cumsum(r)) for r in H]
    cumE = [list(np.cumsum(r)) for r in E]
    for row in cumH + cumE:
        row[-1] = 1.0
    h = int(np.searchsorted(cum_pi, rng.random(), side="right"))
    u = rng.random(2 * length).tolist()
    out = []
    for t in range(length):
        out.append(bisect.bisect_right(cumE[h], u[2 * t]))
        h = bisect.bisect_right(cumH[h], u[2 * t + 1])
    return np.array(out, dtype=np.int64)


def _entropy(p) -> float:
    return -sum(v * math.log2(v) for v in p if v > 0)


class Oracle:
    """Exact stationary quantities of a :class:`ProcessSpec`."""

    def __init__(self, spec: ProcessSpec):
        self.spec = spec.validated()
        self.kind = spec.kind
        if self.kind == "markov":
            self.K, P = _lifted(spec)
            self.A = self.K.shape[1]
            self.m = spec.order
            self.pi_blocks = _stationary(P)
            self.pi = self.pi_blocks.reshape((self.A,) * self.m).sum(
                axis=tuple(range(1, self.m))) if self.m > 1 else self.pi_blocks
        elif self.kind == "hidden_markov":
            self.H = np.array(spec.hidden)
            self.E = np.array(spec.emission)
            self.A = self.E.shape[1]
            self.pi_hidden = _stationary(self.H)
            self.pi = self.pi_hidden @ self.E
        elif self.kind == "iid":
            self.A = len(spec.probs)
            self.pi = np.array(spec.probs)
        else:
            self.A = None

    @property
    def alphabet(self) -> list[int] | None:
        return None if self.A is None else list(range(self.A))

    def symbol_probability(self, x: int) -> float:
        if self.kind == "countable_iid":
            return self.spec.p * (1 - self.spec.p) ** x if x >= 0 else 0.0
        return float(self.pi[x]) if 0 <= x < self.A else 0.0

    # -- block probabilities ------------------------------------------------

    def _ctx_index(self, block) -> int:
        s = 0
        for v in block:
            s = s * self.A + v
        return s

    def block_probability(self, p) -> float:
        p = tuple(int(v) for v in p)
        if not p:
            return 1.0
        if self.kind in ("iid", "countable_iid"):
            return math.prod(self.symbol_probability(v) for v in p)
        if any(not 0 <= v < self.A for v in p):
            return 0.0
        if self.kind == "markov":
            m = self.m
            if len(p) < m:
                arr = self.pi_blocks.reshape((self.A,) * m)
                return float(arr[p].sum())
            prob = float(self.pi_blocks[self._ctx_index(p[:m])])
            for t in range(m, len(p)):
                prob *= self.K[self._ctx_index(p[t - m:t]), p[t]]
                if prob == 0.0:
                    return 0.0
            return float(prob)
        alpha = self.pi_hidden.copy()
        prob = 1.0
        for x in p:
            alpha = alpha * self.E[:, x]
            z = alpha.sum()
            if z == 0:
                return 0.0
            prob *= z
            alpha = (alpha / z) @ self.H
        return float(prob)

    def _positive(self, observed) -> bool:
        if self.kind in ("iid", "countable_iid"):
            return all(self.symbol_probability(v) > 0 for v in observed)
        if any(not 0 <= v < self.A for v in observed):
            return False
        if self.kind == "markov":
            m = self.m
            if len(observed) <= m:
                return self.block_probability(observed) > 0
            if self.pi_blocks[self._ctx_index(observed[:m])] <= 0:
                return False
            obs = np.asarray(observed, dtype=np.int64)
            ctx = np.zeros(len(obs) - m, dtype=np.int64)
            for d in range(m):
                ctx = ctx * self.A + obs[d:len(obs) - m + d]
            return bool(np.all(self.K[ctx, obs[m:]] > 0))
        return self._filter(observed) is not None

    def _filter(self, observed):
        """Predictive hidden-state law after ``observed``; None if impossible."""
        pred = self.pi_hidden.copy()
        for x in observed:
            post = pred * self.E[:, x]
            z = post.sum()
            if z <= 0:
                return None
            pred = (post / z) @ self.H
        return pred

    # -- conditionals -------------------------------------------------------

    def conditional_law(self, observed) -> np.ndarray | None:
        """``P(next = . | observed)`` over the finite alphabet."""
        observed = tuple(int(v) for v in observed)
        if self.kind == "countable_iid":
            raise UnsupportedSpecError("countable alphabet has no finite law vector")
        if self.kind == "iid":
            if not self._positive(observed):
                raise ZeroProbabilityError(f"context {observed[-10:]} has probability zero")
            return self.pi.copy()
        if self.kind == "markov":
            if not self._positive(observed):
                raise ZeroProbabilityError(f"context {observed[-10:]} has probability zero")
            m = self.m
            if len(observed) >= m:
                return self.K[self._ctx_index(observed[len(observed) - m:])].copy()
            den = self.block_probability(observed)
            return np.array([self.block_probability(observed + (y,)) / den
                             for y in range(self.A)])
        pred = self._filter(observed)
        if pred is None:
            raise ZeroProbabilityError(f"context {observed[-10:]} has probability zero")
        return pred @ self.E

    def conditional(self, observed, y: int) -> float:
        """Exact ``P(X_1 = y | X_{-k..0} = observed)``."""
        if self.kind == "countable_iid":
            if not self._positive(observed):
                raise ZeroProbabilityError("context has probability zero")
            return self.symbol_probability(y)
        law = self.conditional_law(observed)
        return float(law[y]) if 0 <= y < self.A else 0.0

    def conditional_laws(self, path, times) -> np.ndarray:
        """Rows ``P(X_{t+1} = . | X_0..X_t)`` for each ``t`` in ``times``,
        computed in one pass over ``path``."""
        times = np.asarray(times, dtype=np.int64)
        if self.kind == "countable_iid":
            raise UnsupportedSpecError("countable alphabet has no finite law vector")
        if self.kind == "iid":
            return np.tile(self.pi, (len(times), 1))
        path = np.asarray(path, dtype=np.int64)
        if self.kind == "markov":
            out = np.empty((len(times), self.A))
            m = self.m
            long_ = times >= m - 1
            ctx = np.zeros(int(long_.sum()), dtype=np.int64)
            tl = times[long_]
            for d in range(m):
                ctx = ctx * self.A + path[tl - m + 1 + d]
            out[long_] = self.K[ctx]
            for i in np.flatnonzero(~long_):
                out[i] = self.conditional_law(path[:times[i] + 1])
            return out
        want = np.zeros(len(path), dtype=bool)
        want[times] = True
        rows = {}
        pred = self.pi_hidden.copy()
        H, E = self.H, self.E
        for t, x in enumerate(path.tolist()):
            post = pred * E[:, x]
            z = post.sum()
            if z <= 0:
                raise ZeroProbabilityError(f"path has probability zero at t={t}")
            pred = (post / z) @ H
            if want[t]:
                rows[t] = pred @ E
        return np.array([rows[t] for t in times.tolist()]).reshape(len(times), self.A)

    # -- memory length ------------------------------------------------------

    def _extensions_agree(self, ctx: tuple, depth: int, tol: float = 1e-12) -> bool:
        """Whether ``P(y | z, ctx) == P(y | ctx)`` for every ``z`` of length
        ``1..depth`` and ``y`` with ``P(z, ctx, y) > 0``."""
        base_den = self.block_probability(ctx)
        base = [self.block_probability(ctx + (y,)) / base_den for y in range(self.A)]
        for i in range(1, depth + 1):
            for z in itertools.product(range(self.A), repeat=i):
                den = self.block_probability(z + ctx)
                if den <= 0:
                    continue
                for y in range(self.A):
                    num = self.block_probability(z + ctx + (y,))
                    if num > 0 and abs(num / den - base[y]) > tol:
                        return False
        return True

    def memory_length(self, observed) -> float:
        """Smallest context depth beyond which longer pasts never change the
        next-symbol law along ``observed``; ``math.inf`` if there is none."""
        observed = tuple(int(v) for v in observed)
        if not self._positive(observed):
            raise ZeroProbabilityError(f"context {observed[-10:]} has probability zero")
        if self.kind in ("iid", "countable_iid"):
            return 0
        if self.kind == "hidden_markov":
            if np.allclose(self.E, self.E[0], atol=1e-15, rtol=0):
                return 0
            return math.inf
        m = self.m
        for K in range(0, m + 1):
            if K > len(observed):
                break
            ctx = observed[len(observed) - K:]
            if K == m or self._extensions_agree(ctx, m - K):
                return K
        raise ValueError(f"context of length {len(observed)} too short to decide the memory "
                         f"of an order-{m} chain")

    def delta_k(self, context, k: int) -> float:
        """Largest change of the next-symbol law when the last ``k`` symbols of
        ``context`` are extended further into the past."""
        context = tuple(int(v) for v in context)
        if self.kind in ("iid", "countable_iid"):
            return 0.0
        if self.kind != "markov":
            raise UnsupportedSpecError("delta_k needs an iid or markov process")
        if len(context) < k:
            raise ValueError("context shorter than k")
        ctx = context[len(context) - k:] if k else ()
        if k >= self.m:
            return 0.0
        base_den = self.block_probability(ctx)
        if base_den <= 0:
            raise ZeroProbabilityError("context has probability zero")
        base = [self.block_probability(ctx + (y,)) / base_den for y in range(self.A)]
        best = 0.0
        for i in range(1, self.m - k + 1):
            for z in itertools.product(range(self.A), repeat=i):
                den = self.block_probability(z + ctx)
                if den <= 0:
                    continue
                for y in range(self.A):
                    num = self.block_probability(z + ctx + (y,))
                    if num > 0:
                        best = max(best, abs(num / den - base[y]))
        return best

    # -- entropy ------------------------------------------------------------

    def entropy_rate(self) -> float:
        """Entropy rate in bits per symbol."""
        if self.kind == "iid":
            return _entropy(self.spec.probs)
        if self.kind == "countable_iid":
            p = self.spec.p
            return (-(1 - p) * math.log2(1 - p) - p * math.log2(p)) / p
        if self.kind == "markov":
            return float(sum(w * _entropy(row) for w, row in zip(self.pi_blocks, self.K)))
        raise UnsupportedSpecError("entropy rate is only provided for iid and markov processes")


def true_conditional(o: Oracle, observed, y: int) -> float:
    return o.conditional(observed, y)


def true_memory_length(o: Oracle, observed) -> float:
    return o.memory_length(observed)


def marginal_block_probability(o: Oracle, p) -> float:
    return o.block_probability(p)


def entropy_rate(o: Oracle) -> float:
    return o.entropy_rate()


def true_delta_k(o: Oracle, context, k: int) -> float:
    return o.delta_k(context, k)
