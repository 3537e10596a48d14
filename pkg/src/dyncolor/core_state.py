"""Dynamic graph, per-vertex attributes and level-partitioned neighbour views.

Every vertex ``v`` carries a level (fixed at construction), a color in
``[1, delta + 1]`` or :data:`UNCOLORED`, and a timestamp.  Besides the plain
adjacency the state keeps, per vertex:

``nb_ge[v]``
    neighbours whose level is at least ``level[v]``;
``nb_gt[v]``
    neighbours whose level is strictly greater;
``d_le[v]``
    number of neighbours whose level is at most ``level[v]``;
``used[v]``
    multiset of colors held by those lower-or-equal neighbours, with
    complement sampling (the palette universe of ``v``).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ._rng import derive_rng
from .errors import DegreeOverflow, DuplicateEdge, LoopEdge, MissingEdge, VertexOutOfRange
from .sampler import UsedColors

UNCOLORED = 0

EdgeKind = Literal["insert", "delete"]


def num_levels(delta: int) -> int:
    """Number of levels, ``ceil(log2 delta) + 1``."""
    return (delta - 1).bit_length() + 1


def sample_level(rng: random.Random, top: int) -> int:
    """Truncated geometric level: ``P[k] = 2**-k`` below ``top``, the remaining mass at ``top``."""
    k = 1
    while k < top and rng.getrandbits(1):
        k += 1
    return k


def level_pmf(delta: int) -> list[float]:
    """Exact level distribution, index 0 holding level 1."""
    top = num_levels(delta)
    return [2.0**-k for k in range(1, top)] + [2.0 ** -(top - 1)]


class EdgeIndex:
    """Edge list with O(1) insert/remove, stored in numpy arrays for vectorised scans."""

    def __init__(self, capacity: int = 16):
        self._u = np.zeros(max(capacity, 16), dtype=np.int64)
        self._v = np.zeros(max(capacity, 16), dtype=np.int64)
        self._pos: dict[tuple[int, int], int] = {}

    def __len__(self) -> int:
        return len(self._pos)

    def __contains__(self, e: tuple[int, int]) -> bool:
        u, v = e
        return (min(u, v), max(u, v)) in self._pos

    def add(self, u: int, v: int) -> None:
        key = (u, v) if u < v else (v, u)
        i = len(self._pos)
        if i == len(self._u):
            self._u = np.concatenate([self._u, np.zeros_like(self._u)])
            self._v = np.concatenate([self._v, np.zeros_like(self._v)])
        self._u[i], self._v[i] = key
        self._pos[key] = i

    def remove(self, u: int, v: int) -> None:
        key = (u, v) if u < v else (v, u)
        i = self._pos.pop(key)
        last = len(self._pos)
        if i != last:
            moved = (int(self._u[last]), int(self._v[last]))
            self._u[i], self._v[i] = moved
            self._pos[moved] = i

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        m = len(self._pos)
        return self._u[:m], self._v[:m]

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self._pos)


def conflicting_edges(
    index: EdgeIndex, colors: list[int], holders: np.ndarray | None = None
) -> np.ndarray:
    """Edges whose endpoints are both colored, both outside ``holders``, and equal in color.

    Returns an ``(k, 2)`` array.  ``holders`` is an optional boolean mask of
    vertices excluded from the check (token holders in partial colorings).
    """
    eu, ev = index.arrays()
    col = np.asarray(colors, dtype=np.int64)
    cu, cv = col[eu], col[ev]
    bad = (cu == cv) & (cu != UNCOLORED)
    if holders is not None:
        bad &= ~holders[eu] & ~holders[ev]
    return np.stack([eu[bad], ev[bad]], axis=1)


@dataclass(frozen=True)
class StructuralDelta:
    """What an edge update changed. ``d_le_changed`` lists endpoints whose ``d_le`` moved."""

    kind: EdgeKind
    u: int
    v: int
    d_le_changed: tuple[int, ...]
    work: int


@dataclass
class ConsistencyReport:
    findings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    @property
    def first(self) -> str | None:
        return self.findings[0] if self.findings else None

    def __bool__(self) -> bool:
        return self.ok


class ColoringState:
    """Graph plus vertex attributes plus derived views; see the module docstring.

    Args:
        n: number of vertices (ids ``0 .. n-1``).
        delta: maximum degree bound; the palette is ``[1, delta + 1]``.
        seed: root seed; levels and initial colors come from named sub-streams.
        levels: optional explicit level assignment (testing hook).
        colors: optional explicit initial colors (testing hook).
    """

    def __init__(
        self,
        n: int,
        delta: int,
        seed: int = 0,
        *,
        levels: list[int] | None = None,
        colors: list[int] | None = None,
    ):
        if n < 1:
            raise ValueError("n must be at least 1")
        if delta < 1:
            raise ValueError("delta must be at least 1")
        self.n = n
        self.delta = delta
        self.palette_size = delta + 1
        self.top_level = num_levels(delta)

        if levels is None:
            lrng = derive_rng(seed, "levels")
            levels = [sample_level(lrng, self.top_level) for _ in range(n)]
        elif len(levels) != n or not all(1 <= x <= self.top_level for x in levels):
            raise ValueError(f"levels must be {n} values in [1, {self.top_level}]")
        if colors is None:
            crng = derive_rng(seed, "colors")
            colors = [crng.randint(1, self.palette_size) for _ in range(n)]
        elif len(colors) != n or not all(1 <= c <= self.palette_size for c in colors):
            raise ValueError(f"colors must be {n} values in [1, {self.palette_size}]")

        self.level: list[int] = list(levels)
        self.color: list[int] = list(colors)
        self.timestamp: list[int] = [0] * n
        self.adj: list[set[int]] = [set() for _ in range(n)]
        self.nb_ge: list[set[int]] = [set() for _ in range(n)]
        self.nb_gt: list[set[int]] = [set() for _ in range(n)]
        self.d_le: list[int] = [0] * n
        self.used: list[UsedColors] = [UsedColors(self.palette_size) for _ in range(n)]
        self.edges = EdgeIndex(n)

    # -- queries -----------------------------------------------------------

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def check_update(self, u: int, v: int, kind: EdgeKind) -> None:
        """Raise the matching :class:`InvalidUpdate` if ``(u, v, kind)`` is not applicable."""
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise VertexOutOfRange(u, v, self.n)
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

    # -- mutation ----------------------------------------------------------

    def apply_edge_structural(self, u: int, v: int, kind: EdgeKind) -> StructuralDelta:
        """Update adjacency, views and samplers for one edge; no recoloring happens here."""
        self.check_update(u, v, kind)
        lu, lv = self.level[u], self.level[v]
        changed: list[int] = []
        work = 2
        if kind == "insert":
            self.adj[u].add(v)
            self.adj[v].add(u)
            self.edges.add(u, v)
            for a, b, la, lb in ((u, v, lu, lv), (v, u, lv, lu)):
                if la <= lb:
                    # a is lower-or-equal for b
                    self.nb_ge[a].add(b)
                    if la < lb:
                        self.nb_gt[a].add(b)
                    self.d_le[b] += 1
                    changed.append(b)
                    if self.color[a] != UNCOLORED:
                        self.used[b].add(self.color[a])
                    work += 3
        else:
            self.adj[u].discard(v)
            self.adj[v].discard(u)
            self.edges.remove(u, v)
            for a, b, la, lb in ((u, v, lu, lv), (v, u, lv, lu)):
                if la <= lb:
                    self.nb_ge[a].discard(b)
                    if la < lb:
                        self.nb_gt[a].discard(b)
                    self.d_le[b] -= 1
                    changed.append(b)
                    if self.color[a] != UNCOLORED:
                        self.used[b].remove(self.color[a])
                    work += 3
        return StructuralDelta(kind, u, v, tuple(changed), work)

    def uncolor(self, v: int) -> int:
        """Set ``v`` to UNCOLORED, withdrawing its color from neighbours' samplers.

        Returns the number of neighbours touched.
        """
        c = self.color[v]
        if c == UNCOLORED:
            return 0
        nbrs = self.nb_ge[v]
        for w in nbrs:
            self.used[w].remove(c)
        self.color[v] = UNCOLORED
        return len(nbrs)

    # -- palette introspection ---------------------------------------------

    def palette_sizes(self, v: int) -> tuple[int, int]:
        """Exact ``(|universe|, |palette|)`` of ``v`` against the current colors.

        The universe excludes colors of colored lower-or-equal neighbours; the
        palette further excludes colors held by two or more colored
        strictly-higher neighbours.
        """
        used = self.used[v]
        universe = self.palette_size - len(used)
        above: dict[int, int] = {}
        color = self.color
        for w in self.nb_gt[v]:
            c = color[w]
            if c != UNCOLORED:
                above[c] = above.get(c, 0) + 1
        blocked = sum(1 for c, k in above.items() if k >= 2 and c not in used)
        return universe, universe - blocked

    # -- verification ------------------------------------------------------

    def conflicts(self, holders: np.ndarray | None = None) -> np.ndarray:
        return conflicting_edges(self.edges, self.color, holders)

    def is_proper(self) -> bool:
        """True iff every vertex is colored and no edge is monochromatic."""
        if UNCOLORED in self.color:
            return False
        return len(self.conflicts()) == 0

    def verify_consistency(self, limit: int = 20) -> ConsistencyReport:
        """Rebuild all derived views from the raw edges and colors and compare."""
        report = ConsistencyReport()
        find = report.findings

        def note(msg: str) -> bool:
            find.append(msg)
            return len(find) >= limit

        level, color = self.level, self.color
        if sorted(self.edges.edges()) != sorted(
            (u, v) for u in range(self.n) for v in self.adj[u] if u < v
        ):
            if note("edge index out of sync with adjacency"):
                return report
        for v in range(self.n):
            nbrs = self.adj[v]
            if v in nbrs and note(f"vertex {v}: self loop"):
                return report
            if len(nbrs) > self.delta and note(f"vertex {v}: degree {len(nbrs)} > {self.delta}"):
                return report
            for w in nbrs:
                if v not in self.adj[w] and note(f"edge ({v}, {w}) not symmetric"):
                    return report
            lv = level[v]
            ge = {w for w in nbrs if level[w] >= lv}
            gt = {w for w in nbrs if level[w] > lv}
            le = [w for w in nbrs if level[w] <= lv]
            if self.nb_ge[v] != ge and note(f"vertex {v}: nb_ge mismatch"):
                return report
            if self.nb_gt[v] != gt and note(f"vertex {v}: nb_gt mismatch"):
                return report
            if self.d_le[v] != len(le) and note(
                f"vertex {v}: d_le is {self.d_le[v]}, expected {len(le)}"
            ):
                return report
            want: dict[int, int] = {}
            for w in le:
                if color[w] != UNCOLORED:
                    want[color[w]] = want.get(color[w], 0) + 1
            used = self.used[v]
            if used.counts() != want and note(f"vertex {v}: sampler multiset mismatch"):
                return report
            if set(used.sampler) != set(want) and note(f"vertex {v}: sampler support mismatch"):
                return report
            problem = used.sampler.check()
            if problem and note(f"vertex {v}: {problem}"):
                return report
        return report

    def dump(self) -> str:
        """One vertex per line: ``id level color-or-⊥ timestamp``."""
        lines = []
        for v in range(self.n):
            c = self.color[v]
            lines.append(f"{v} {self.level[v]} {'⊥' if c == UNCOLORED else c} {self.timestamp[v]}")
        return "\n".join(lines) + "\n"

    def snapshot(self) -> tuple[tuple[int, ...], tuple[int, ...], tuple[tuple[int, int], ...]]:
        """Hashable ``(colors, timestamps, edges)`` for determinism comparisons."""
        return tuple(self.color), tuple(self.timestamp), tuple(self.edges.edges())
