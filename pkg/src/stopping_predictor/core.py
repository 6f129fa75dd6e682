"""Shared domain types: patterns, block-length schedules, estimator parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

Pattern = tuple  # tuple[int, ...]; the empty tuple is a legal pattern


class ParameterError(ValueError):
    """An estimator parameter violates its constraints."""


class PendingError(LookupError):
    """A stopping time has not been reached with the data observed so far."""


class ScheduleHorizonError(IndexError):
    """A table schedule was evaluated beyond its declared horizon."""


def as_pattern(symbols: Iterable[int]) -> Pattern:
    p = tuple(int(s) for s in symbols)
    if any(s < 0 for s in p):
        raise ValueError(f"symbols must be nonnegative integers, got {p}")
    return p


@dataclass(frozen=True)
class Schedule:
    """Nondecreasing unbounded block-length sequence ``l(1)=1 <= l(2) <= ...``
    with ``l(k) <= k``.

    ``kind`` is ``"identity"`` (``l(k)=k``), ``"log"``
    (``l(k) = min(k, max(1, floor((2+delta)/(eps1-eps2) * log2 k)))``) or
    ``"table"`` (explicit values for ``k = 1..len(table)``; evaluating beyond
    the table raises :class:`ScheduleHorizonError`).
    """

    kind: str = "identity"
    delta: float = 1.0
    eps1: float = 0.5
    eps2: float = 0.25
    table: tuple = ()
    _j_cache: list = field(default_factory=list, init=False, repr=False,
                           compare=False, hash=False)

    def __post_init__(self):
        if self.kind == "identity":
            pass
        elif self.kind == "log":
            if not self.delta > 0:
                raise ParameterError("log schedule needs delta > 0")
            if not 0 < self.eps2 < self.eps1:
                raise ParameterError("log schedule needs 0 < eps2 < eps1")
        elif self.kind == "table":
            t = tuple(int(v) for v in self.table)
            object.__setattr__(self, "table", t)
            if not t:
                raise ParameterError("table schedule needs at least one entry")
            if t[0] != 1:
                raise ParameterError("table schedule must start with l(1) = 1")
            for k, (a, b) in enumerate(zip(t, t[1:]), start=2):
                if b < a:
                    raise ParameterError(f"table schedule decreases at k={k}")
            for k, v in enumerate(t, start=1):
                if not 1 <= v <= k:
                    raise ParameterError(f"table schedule needs 1 <= l(k) <= k, l({k})={v}")
        else:
            raise ParameterError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def identity(cls) -> "Schedule":
        return cls("identity")

    @classmethod
    def logarithmic(cls, delta: float = 1.0, eps1: float = 0.5, eps2: float = 0.25) -> "Schedule":
        return cls("log", delta=delta, eps1=eps1, eps2=eps2)

    @classmethod
    def from_table(cls, values: Sequence[int]) -> "Schedule":
        return cls("table", table=tuple(values))

    @property
    def horizon(self) -> float:
        return len(self.table) if self.kind == "table" else math.inf

    @property
    def log_factor(self) -> float:
        return (2 + self.delta) / (self.eps1 - self.eps2)

    def __call__(self, k: int) -> int:
        if k < 1:
            raise ValueError(f"schedule index must be >= 1, got {k}")
        if self.kind == "identity":
            return k
        if self.kind == "log":
            return min(k, max(1, math.floor(self.log_factor * math.log2(k))))
        if k > len(self.table):
            raise ScheduleHorizonError(f"l({k}) requested beyond table horizon {len(self.table)}")
        return self.table[k - 1]

    def J(self, n: int) -> int:
        """Smallest ``j >= 1`` with ``l(j+1) > n``."""
        if n < 0:
            raise ValueError("J(n) needs n >= 0")
        if self.kind == "identity":
            return max(1, n)
        if self.kind == "log":
            # J grows exponentially in n here, so bracket and bisect
            lo, hi = 1, 2
            while self(hi + 1) <= n:
                lo, hi = hi, hi * 2
            while lo < hi:
                mid = (lo + hi) // 2
                if self(mid + 1) > n:
                    hi = mid
                else:
                    lo = mid + 1
            return lo
        cache = self._j_cache
        # cache[m] = J(m); J is nondecreasing so each scan resumes from J(m-1)
        while len(cache) <= n:
            m = len(cache)
            j = cache[-1] if cache else 1
            while self(j + 1) <= m:
                j += 1
            cache.append(j)
        return cache[n]

    def describe(self) -> str:
        if self.kind == "identity":
            return "identity"
        if self.kind == "log":
            return f"log:delta={self.delta!r},eps1={self.eps1!r},eps2={self.eps2!r}"
        return "table:" + ",".join(map(str, self.table))

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        """Parse ``identity``, ``log`` / ``log:delta=..,eps1=..,eps2=..`` or
        ``table:1,2,2,3``."""
        text = text.strip()
        if text == "identity":
            return cls.identity()
        kind, _, rest = text.partition(":")
        if kind == "log":
            kw = {}
            for item in filter(None, rest.split(",")):
                key, _, val = item.partition("=")
                if key.strip() not in ("delta", "eps1", "eps2"):
                    raise ParameterError(f"unknown log schedule parameter {key!r}")
                kw[key.strip()] = float(val)
            return cls.logarithmic(**kw)
        if kind == "table":
            return cls.from_table([int(v) for v in rest.split(",") if v.strip()])
        raise ParameterError(f"cannot parse schedule {text!r}")


def schedule_J(schedule: Schedule, n: int) -> int:
    return schedule.J(n)


@dataclass(frozen=True)
class TargetFunction:
    """A bounded function of one symbol, with its declared bound."""

    fn: Callable[[int], float]
    bound: float
    name: str = "f"

    def __call__(self, x: int) -> float:
        v = float(self.fn(x))
        if abs(v) > self.bound:
            raise ParameterError(f"target function {self.name} exceeds declared bound "
                                 f"{self.bound} at x={x}: {v}")
        return v


def indicator(z: Hashable) -> TargetFunction:
    return TargetFunction(lambda x, z=z: 1.0 if x == z else 0.0, 1.0, name=f"1{{x={z}}}")


@dataclass(frozen=True)
class EstimatorParams:
    """Thresholds ``beta`` (for the deviation statistic) and ``gamma`` (for the
    frequency cut), the block-length schedule, and an optional scalar target.
    ``target=None`` means the indicator family, i.e. a full next-symbol
    distribution."""

    beta: float = 0.3
    gamma: float = 0.3
    schedule: Schedule = field(default_factory=Schedule.identity)
    target: TargetFunction | None = None

    def validate(self) -> "EstimatorParams":
        validate_params(self)
        return self


def validate_params(p: EstimatorParams) -> None:
    if not p.beta > 0:
        raise ParameterError(f"beta must be positive (got {p.beta})")
    if not p.beta < 1:
        raise ParameterError(f"beta must be < 1 (got {p.beta})")
    if not p.gamma > 0:
        raise ParameterError(f"gamma must be positive (got {p.gamma})")
    if not p.gamma < 1:
        raise ParameterError(f"gamma must be < 1 (got {p.gamma})")
    if not 2 * p.beta + p.gamma < 1:
        raise ParameterError(f"constraint 2*beta + gamma < 1 violated "
                             f"(2*{p.beta} + {p.gamma} = {2 * p.beta + p.gamma})")
    if not isinstance(p.schedule, Schedule):
        raise ParameterError("schedule must be a Schedule")
    if p.target is not None:
        if not isinstance(p.target, TargetFunction):
            raise ParameterError("target must be a TargetFunction with a declared bound")
        if not (p.target.bound >= 0 and math.isfinite(p.target.bound)):
            raise ParameterError("target function bound must be finite and nonnegative")


class SymbolCodec:
    """Maps arbitrary hashable labels to dense nonnegative integer symbols in
    order of first appearance."""

    def __init__(self, labels: Iterable[Hashable] = ()):
        self._index: dict = {}
        self._labels: list = []
        for lab in labels:
            self.encode_one(lab)

    def encode_one(self, label: Hashable) -> int:
        i = self._index.get(label)
        if i is None:
            i = len(self._labels)
            self._index[label] = i
            self._labels.append(label)
        return i

    def encode(self, labels: Iterable[Hashable]) -> list[int]:
        return [self.encode_one(lab) for lab in labels]

    def decode(self, symbols: Iterable[int]) -> list:
        return [self._labels[s] for s in symbols]

    @property
    def labels(self) -> tuple:
        return tuple(self._labels)

    def __len__(self) -> int:
        return len(self._labels)
