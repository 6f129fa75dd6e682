"""Incremental block-occurrence counting over the two halves of a growing path.

Blocks (patterns) of length up to ``max_len`` are nodes of a trie keyed by
reading the block right to left: the root is the empty block and the child of
``node(p)`` under symbol ``a`` is ``node((a,) + p)``.  Left-extensions of a
block are therefore its children, which is the access pattern the
deviation statistic needs.

Counts are kept for occurrences lying entirely inside a sliding window
``X[start..end]``; counts by end position (blocks may start before
``start``) are derived from them with ``O(len(p))`` extra work.  The first-half membership test needs no window of its
own: every node remembers the end position of the first occurrence of its
block anywhere in the path, and a block occurs in ``X[0..h-1]`` iff that
position is ``<= h-1``.
"""

from __future__ import annotations

from .core import Pattern


class PatternTooLongError(ValueError):
    """A query asked for a block longer than the index currently tracks."""


class BlockIndex:
    """Window counts of all blocks of length ``<= max_len``.

    ``count_inside(p)`` is the number of ``t`` with
    ``start + len(p) - 1 <= t <= end`` and ``X[t-len(p)+1..t] == p``;
    ``count(p)`` relaxes the lower bound to ``t >= start``.  The empty block
    counts the window size under both.
    ``append`` advances ``end``; ``advance_start`` advances ``start``.  Both
    cost ``O(max_len)``.
    """

    def __init__(self, max_len: int = 8):
        if max_len < 1:
            raise ValueError("max_len must be >= 1")
        self.max_len = max_len
        self.path: list[int] = []
        self.start = 0
        self._children: list[dict] = [{}]
        self._count: list[int] = [0]
        self._first_end: list[int] = [-1]
        # end position b -> nodes of the blocks ending at b, lengths 1..min(max_len, b+1);
        # kept for b >= start only
        self._rows: dict[int, list[int]] = {}

    @property
    def end(self) -> int:
        return len(self.path) - 1

    @property
    def n_nodes(self) -> int:
        return len(self._count)

    def _new_node(self, first_end: int) -> int:
        self._children.append({})
        self._count.append(0)
        self._first_end.append(first_end)
        return len(self._count) - 1

    def append(self, symbol: int) -> None:
        path = self.path
        b = len(path)
        path.append(symbol)
        children = self._children
        count = self._count
        counted = b - self.start + 1
        row = []
        node = 0
        for m in range(1, min(self.max_len, b + 1) + 1):
            s = path[b - m + 1]
            ch = children[node]
            nxt = ch.get(s)
            if nxt is None:
                nxt = self._new_node(b)
                ch[s] = nxt
            if m <= counted:
                count[nxt] += 1
            row.append(nxt)
            node = nxt
        self._rows[b] = row
        count[0] += 1

    def advance_start(self) -> None:
        a = self.start
        end = self.end
        if a > end:
            raise ValueError("window is already empty")
        count = self._count
        rows = self._rows
        for m in range(1, min(self.max_len, end - a + 1) + 1):
            count[rows[a + m - 1][m - 1]] -= 1
        count[0] -= 1
        del rows[a]
        self.start = a + 1

    def grow(self, new_max_len: int) -> None:
        """Start tracking blocks up to ``new_max_len``; one pass over the path."""
        old = self.max_len
        if new_max_len <= old:
            return
        path = self.path
        children = self._children
        count = self._count
        rows = self._rows
        start = self.start
        for b in range(len(path)):
            if b + 1 <= old:
                continue
            row = rows.get(b)
            if row is not None:
                node = row[old - 1]
            else:
                node = 0
                for m in range(1, old + 1):
                    node = children[node][path[b - m + 1]]
            for m in range(old + 1, min(new_max_len, b + 1) + 1):
                s = path[b - m + 1]
                ch = children[node]
                nxt = ch.get(s)
                if nxt is None:
                    nxt = self._new_node(b)
                    ch[s] = nxt
                if row is not None:
                    if b - m + 1 >= start:
                        count[nxt] += 1
                    row.append(nxt)
                node = nxt
        self.max_len = new_max_len

    def node(self, p: Pattern) -> int | None:
        if len(p) > self.max_len:
            raise PatternTooLongError(f"pattern of length {len(p)} exceeds max_len={self.max_len}")
        node = 0
        children = self._children
        for s in reversed(p):
            node = children[node].get(s)
            if node is None:
                return None
        return node

    def count_inside(self, p: Pattern) -> int:
        node = self.node(p)
        return 0 if node is None else self._count[node]

    def count(self, p: Pattern) -> int:
        """Occurrences ending at some ``t`` in ``[start, end]``."""
        node = self.node(p)
        if node is None:
            return 0
        c = self._count[node]
        m = len(p)
        rows = self._rows
        # blocks that end in the window but start before it
        for t in range(max(self.start, m - 1), min(self.start + m - 2, self.end) + 1):
            if rows[t][m - 1] == node:
                c += 1
        return c

    def first_end(self, p: Pattern) -> int | None:
        """End position of the first occurrence of ``p`` anywhere in the path."""
        if not p:
            return -1
        node = self.node(p)
        return None if node is None else self._first_end[node]

    def ends_at(self, p: Pattern, t: int) -> bool:
        """Whether ``X[t-len(p)+1..t] == p``, for ``t`` inside the window."""
        if not p:
            return True
        node = self.node(p)
        if node is None or t - len(p) + 1 < 0:
            return False
        return self._rows[t][len(p) - 1] == node

    def occurrence_times(self, p: Pattern, i: int, inside: bool = False) -> int | None:
        """``i``-th smallest end position ``t`` in the window with
        ``X[t-len(p)+1..t] == p`` (with ``inside``, the block must also start
        in the window)."""
        if i < 1:
            raise ValueError("occurrence index starts at 1")
        lo = self.start + len(p) - 1 if inside else max(self.start, len(p) - 1)
        if not p:
            t = self.start + i - 1
            return t if t <= self.end else None
        node = self.node(p)
        if node is None or (self.count_inside(p) if inside else self.count(p)) < i:
            return None
        m = len(p) - 1
        rows = self._rows
        seen = 0
        for t in range(lo, self.end + 1):
            if rows[t][m] == node:
                seen += 1
                if seen == i:
                    return t
        return None  # pragma: no cover - counts and rows disagree


def count(w: BlockIndex, p: Pattern) -> int:
    return w.count(p)


def occurrence_times(w: BlockIndex, p: Pattern, i: int) -> int | None:
    return w.occurrence_times(p, i)


class TwoHalfIndex:
    """Split view of ``X[0..n]`` into ``X[0..h-1]`` and ``X[h..n]`` with
    ``h = ceil(n/2)``.

    ``in_l1`` tests occurrence in the first half, ``in_l2`` tests for more than
    ``n**(1-gamma)`` occurrences in the second half.  The index grows its
    maximal block length on demand.
    """

    def __init__(self, gamma: float, max_len: int = 8):
        self.gamma = gamma
        self.index = BlockIndex(max_len)

    @property
    def path(self) -> list[int]:
        return self.index.path

    @property
    def n(self) -> int:
        return self.index.end

    @property
    def half(self) -> int:
        return (self.n + 1) // 2  # ceil(n/2)

    @property
    def max_len(self) -> int:
        return self.index.max_len

    def append(self, symbol: int) -> None:
        idx = self.index
        idx.append(symbol)
        h = (idx.end + 1) // 2
        while idx.start < h:
            idx.advance_start()

    def extend(self, symbols) -> None:
        for s in symbols:
            self.append(s)

    def ensure_len(self, m: int) -> None:
        if m > self.index.max_len:
            new = self.index.max_len
            while new < m:
                new *= 2
            self.index.grow(new)

    def threshold(self) -> float:
        return float(self.n) ** (1.0 - self.gamma)

    def count_second(self, p: Pattern) -> int:
        """Occurrences lying inside ``X[h..n]``."""
        self.ensure_len(len(p))
        return self.index.count_inside(p)

    def denominator(self, p: Pattern) -> int:
        """Occurrences of ``p`` inside ``X[h..n-1]`` (the conditioning count)."""
        self.ensure_len(len(p))
        idx = self.index
        c = idx.count_inside(p)
        if p and c and self.n - len(p) + 1 >= self.half and idx.ends_at(p, self.n):
            c -= 1
        return c

    def in_l1(self, p: Pattern) -> bool:
        if self.n < 0:
            return False
        self.ensure_len(len(p))
        fe = self.index.first_end(p)
        return fe is not None and fe <= self.half - 1

    def in_l2(self, p: Pattern) -> bool:
        if self.n < 0:
            return False
        return self.count_second(p) > self.threshold()

    def in_ln(self, p: Pattern) -> bool:
        return self.in_l1(p) and self.in_l2(p)

    def empirical_conditional(self, context: Pattern, x: int) -> float | None:
        """Second-half frequency of ``x`` following ``context``; ``None`` when
        ``context`` never occurs in ``X[h..n-1]``."""
        den = self.denominator(tuple(context))
        if den == 0:
            return None
        return self.count_second(tuple(context) + (x,)) / den

    def occurrence_times(self, p: Pattern, i: int) -> int | None:
        """End of the ``i``-th occurrence lying inside ``X[h..n]``."""
        self.ensure_len(len(p))
        return self.index.occurrence_times(p, i, inside=True)


def in_L1(v: TwoHalfIndex, p: Pattern) -> bool:
    return v.in_l1(p)


def in_L2(v: TwoHalfIndex, p: Pattern) -> bool:
    return v.in_l2(p)


def in_Ln(v: TwoHalfIndex, p: Pattern) -> bool:
    return v.in_ln(p)


def empirical_conditional(v: TwoHalfIndex, context: Pattern, x: int) -> float | None:
    return v.empirical_conditional(context, x)
