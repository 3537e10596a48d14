"""Worst-case bounded updates by running several sequential engines in lockstep.

Each of ``K`` copies owns an independent :class:`SequentialEngine` and a FIFO
of pending updates.  An update is appended to every queue, after which each
copy may spend ``budget`` work units on its queue, resuming a half-finished
recolor cascade where it stopped.  A copy whose queue is empty and which has
no suspended update is *clean*; queries are answered from a clean copy in
O(1).

Budgets are accounted as credit: a step's cost is only known once it has
run, so a copy may overdraw and starts the next update in debt.  Credit does
not accumulate while a copy is idle.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Literal

from ._rng import derive_seed
from .core_state import EdgeKind
from .errors import DegreeOverflow, DuplicateEdge, LoopEdge, MissingEdge, NoCleanCopy, VertexOutOfRange
from .seq_engine import SequentialEngine, Steps

NoCleanPolicy = Literal["raise", "drain"]


def default_copies(n: int) -> int:
    return 2 * max(1, math.ceil(math.log2(max(2, n))))


def default_budget(n: int) -> int:
    return 64 * max(1, math.ceil(math.log2(max(2, n))))


@dataclass
class EngineCopy:
    index: int
    seed: int
    engine: SequentialEngine
    queue: deque = field(default_factory=deque)
    in_progress: Steps | None = None
    credit: float = 0.0
    consumed: int = 0  # updates fully applied

    @property
    def clean(self) -> bool:
        return self.in_progress is None and not self.queue

    def backlog(self) -> int:
        return len(self.queue) + (self.in_progress is not None)

    def spend(self, budget: float) -> None:
        self.credit += budget
        while self.credit > 0:
            if self.in_progress is None:
                if not self.queue:
                    self.credit = 0.0
                    return
                u, v, kind = self.queue.popleft()
                self.in_progress = self.engine.steps(u, v, kind)
            try:
                self.credit -= next(self.in_progress)
            except StopIteration:
                self.in_progress = None
                self.consumed += 1

    def finish(self) -> None:
        self.spend(math.inf)


@dataclass
class DeamortizedStats:
    updates: int = 0
    queries: int = 0
    no_clean_events: int = 0
    min_clean: int = 0
    max_backlog: int = 0


class DeamortizedColoring:
    """``K`` independent sequential engines behind a clean-copy query router.

    Args:
        copies: number of engines (default ``2 * ceil(log2 n)``).
        budget: work units per copy and update (default ``64 * ceil(log2 n)``);
            ``math.inf`` makes every copy finish each update immediately.
        on_no_clean: ``"raise"`` to signal :class:`NoCleanCopy` from
            :meth:`query`, or ``"drain"`` to finish the least-loaded copy's
            backlog and answer from it.
    """

    def __init__(
        self,
        n: int,
        delta: int,
        seed: int = 0,
        *,
        copies: int | None = None,
        budget: float | None = None,
        on_no_clean: NoCleanPolicy = "raise",
    ):
        if on_no_clean not in ("raise", "drain"):
            raise ValueError(f"unknown policy {on_no_clean!r}")
        self.n = n
        self.delta = delta
        self.seed = seed
        k = default_copies(n) if copies is None else copies
        if k < 1:
            raise ValueError("need at least one copy")
        self.budget = default_budget(n) if budget is None else budget
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        self.on_no_clean = on_no_clean
        self.copies: list[EngineCopy] = []
        for i in range(k):
            s = derive_seed(seed, "copy", i)
            self.copies.append(EngineCopy(i, s, SequentialEngine(n, delta, s)))
        self.adj: list[set[int]] = [set() for _ in range(n)]
        self.history: list[tuple[int, int, EdgeKind]] = []
        self.clean: set[int] = set(range(k))
        self.last_clean = 0
        self.stats = DeamortizedStats(min_clean=k)

    def _check(self, u: int, v: int, kind: EdgeKind) -> None:
        n = self.n
        if not (0 <= u < n and 0 <= v < n):
            raise VertexOutOfRange(u, v, n)
        if u == v:
            raise LoopEdge(u, v)
        if kind == "insert":
            if v in self.adj[u]:
                raise DuplicateEdge(u, v)
            for w in (u, v):
                if len(self.adj[w]) >= self.delta:
                    raise DegreeOverflow(u, v, w, self.delta)
        elif kind == "delete":
            if v not in self.adj[u]:
                raise MissingEdge(u, v)
        else:
            raise ValueError(f"unknown update kind {kind!r}")

    def update(self, u: int, v: int, kind: EdgeKind) -> None:
        self._check(u, v, kind)
        if kind == "insert":
            self.adj[u].add(v)
            self.adj[v].add(u)
        else:
            self.adj[u].discard(v)
            self.adj[v].discard(u)
        self.history.append((u, v, kind))
        self.stats.updates += 1
        for cp in self.copies:
            cp.queue.append((u, v, kind))
            cp.spend(self.budget)
        self._refresh()

    def update_many(self, updates: Iterable[tuple[int, int, EdgeKind]]) -> None:
        for u, v, kind in updates:
            self.update(u, v, kind)

    def _refresh(self) -> None:
        self.clean = {cp.index for cp in self.copies if cp.clean}
        st = self.stats
        st.min_clean = min(st.min_clean, len(self.clean))
        st.max_backlog = max(st.max_backlog, max(cp.backlog() for cp in self.copies))
        if not self.clean:
            st.no_clean_events += 1
        elif self.last_clean not in self.clean:
            self.last_clean = min(self.clean)

    def has_clean_copy(self) -> bool:
        return bool(self.clean)

    def clean_copy(self) -> EngineCopy:
        if not self.clean:
            if self.on_no_clean == "raise":
                raise NoCleanCopy(f"all {len(self.copies)} copies have pending work")
            cp = min(self.copies, key=lambda c: (c.backlog(), c.index))
            cp.finish()
            self._refresh()
        if self.last_clean not in self.clean:
            self.last_clean = min(self.clean)
        return self.copies[self.last_clean]

    def query(self, v: int) -> int:
        if not 0 <= v < self.n:
            raise VertexOutOfRange(v, v, self.n)
        self.stats.queries += 1
        return self.clean_copy().engine.state.color[v]

    def oracle(self, index: int) -> SequentialEngine:
        """Fresh engine replaying the prefix copy ``index`` has fully applied."""
        cp = self.copies[index]
        ref = SequentialEngine(self.n, self.delta, cp.seed)
        for u, v, kind in self.history[: cp.consumed]:
            ref.update(u, v, kind)
        return ref

    def matches_oracle(self, index: int) -> bool:
        cp = self.copies[index]
        if not cp.clean:
            return False
        ref = self.oracle(index)
        return ref.state.color == cp.engine.state.color and ref.state.timestamp == cp.engine.state.timestamp
