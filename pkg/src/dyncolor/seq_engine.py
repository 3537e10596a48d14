"""Sequential dynamic (delta + 1)-coloring with O(1) expected work per update.

An insertion between two equally colored endpoints recolors the endpoint
that was colored later.  A deletion recolors each endpoint that lost a
lower-or-equal neighbour with probability ``1 / (delta + 1 - d_le)``.  A
recolor samples the vertex's palette (colors unused at lower-or-equal levels
and used at most once above) and, if the new color is shared with a single
higher-level neighbour, recolors that neighbour next.  Levels strictly rise
along the chain, so it stops after at most ``num_levels(delta)`` steps.

Every update is written as a generator that yields the work units of each
completed step; the public methods simply drain it.  The deamortized wrapper
drives the same generators under a work budget.
"""

from __future__ import annotations

from collections.abc import Generator
from dataclasses import dataclass, field
from typing import Literal

from ._rng import derive_rng
from .core_state import UNCOLORED, ColoringState, EdgeKind

Trigger = Literal["insert-conflict", "delete-lottery", "manual"]
Steps = Generator[int, None, "list[RecolorTrace]"]


@dataclass(frozen=True)
class ChainLink:
    vertex: int
    level: int
    touched_neighbors: int
    sample_attempts: int


@dataclass
class RecolorTrace:
    """One recoloring cascade; ``cost`` is the summed size of ``nb_ge`` along it."""

    trigger: Trigger
    chain: list[ChainLink] = field(default_factory=list)

    @property
    def cost(self) -> int:
        return sum(link.touched_neighbors for link in self.chain)

    @property
    def levels(self) -> list[int]:
        return [link.level for link in self.chain]

    def is_climb(self) -> bool:
        lv = self.levels
        return all(a < b for a, b in zip(lv, lv[1:]))


@dataclass
class EngineStats:
    updates: int = 0
    work: int = 0
    recolors: int = 0
    palette_calls: int = 0
    palette_attempts: int = 0
    palette_violations: int = 0
    chain_violations: int = 0
    max_chain: int = 0

    @property
    def mean_attempts(self) -> float:
        return self.palette_attempts / self.palette_calls if self.palette_calls else 0.0


def drain(steps: Steps) -> list[RecolorTrace]:
    """Run a step generator to completion and return its result."""
    try:
        while True:
            next(steps)
    except StopIteration as stop:
        return stop.value


class SequentialEngine:
    """Single-update engine over a :class:`ColoringState`.

    Args:
        n, delta, seed: forwarded to :class:`ColoringState`; the engine's own
            random choices come from an independent stream of the same seed.
        check_palette: measure the exact palette at every sample and count
            calls where it is smaller than half the universe (or than half of
            ``delta + 1 - d_le``).
    """

    def __init__(
        self,
        n: int,
        delta: int,
        seed: int = 0,
        *,
        check_palette: bool = False,
        levels: list[int] | None = None,
        colors: list[int] | None = None,
    ):
        self.state = ColoringState(n, delta, seed, levels=levels, colors=colors)
        self.seed = seed
        self.check_palette = check_palette
        self.stats = EngineStats()
        self.clock = 0
        self._rng = derive_rng(seed, "seq")

    @property
    def n(self) -> int:
        return self.state.n

    @property
    def delta(self) -> int:
        return self.state.delta

    def color(self, v: int) -> int:
        return self.state.color[v]

    # -- public update API ---------------------------------------------------

    def add_edge(self, u: int, v: int) -> RecolorTrace | None:
        traces = drain(self.steps(u, v, "insert"))
        return traces[0] if traces else None

    def delete_edge(self, u: int, v: int) -> list[RecolorTrace]:
        return drain(self.steps(u, v, "delete"))

    def update(self, u: int, v: int, kind: EdgeKind) -> list[RecolorTrace]:
        return drain(self.steps(u, v, kind))

    def recolor(self, v: int) -> RecolorTrace:
        traces = drain(self._single(self._recolor_steps(v, "manual")))
        return traces[0]

    def steps(self, u: int, v: int, kind: EdgeKind) -> Steps:
        """Generator form of one update. Validation happens before the first yield."""
        self.state.check_update(u, v, kind)
        if kind == "insert":
            return self._add_steps(u, v)
        return self._delete_steps(u, v)

    # -- internals -----------------------------------------------------------

    def _charge(self, units: int) -> int:
        self.stats.work += units
        return units

    def _single(self, gen: Generator[int, None, RecolorTrace]) -> Steps:
        trace = yield from gen
        return [trace]

    def _add_steps(self, u: int, v: int) -> Steps:
        st = self.state
        delta = st.apply_edge_structural(u, v, "insert")
        self.stats.updates += 1
        yield self._charge(delta.work)
        if st.color[u] != st.color[v]:
            return []
        # the endpoint colored later is recolored; ties go to the larger id
        if (st.timestamp[u], u) > (st.timestamp[v], v):
            u, v = v, u
        trace = yield from self._recolor_steps(v, "insert-conflict")
        return [trace]

    def _delete_steps(self, u: int, v: int) -> Steps:
        st = self.state
        delta = st.apply_edge_structural(u, v, "delete")
        self.stats.updates += 1
        yield self._charge(delta.work)
        traces = []
        lu, lv = st.level[u], st.level[v]
        p1 = st.palette_size
        rng = self._rng
        if lv <= lu:
            hit = rng.random() * (p1 - st.d_le[u]) < 1.0
            yield self._charge(1)
            if hit:
                traces.append((yield from self._recolor_steps(u, "delete-lottery")))
        if lu <= lv:
            hit = rng.random() * (p1 - st.d_le[v]) < 1.0
            yield self._charge(1)
            if hit:
                traces.append((yield from self._recolor_steps(v, "delete-lottery")))
        return traces

    def _recolor_steps(self, v: int, trigger: Trigger) -> Generator[int, None, RecolorTrace]:
        st = self.state
        trace = RecolorTrace(trigger)
        color, used, nb_ge = st.color, st.used, st.nb_ge
        target: int | None = v
        while target is not None:
            v = target
            touched = st.uncolor(v)
            yield self._charge(2 * touched + 1)
            c, attempts, work = self._sample(v)
            yield self._charge(work)
            color[v] = c
            self.clock += 1
            st.timestamp[v] = self.clock
            target = None
            nbrs = nb_ge[v]
            for w in nbrs:
                used[w].add(c)
                if color[w] == c:
                    target = w
            yield self._charge(2 * len(nbrs) + 1)
            trace.chain.append(ChainLink(v, st.level[v], len(nbrs), attempts))
            self.stats.recolors += 1
        if not trace.is_climb() or len(trace.chain) > st.top_level:
            self.stats.chain_violations += 1
        self.stats.max_chain = max(self.stats.max_chain, len(trace.chain))
        return trace

    def sample_from_palette(self, v: int) -> int:
        """Uniform color from the palette of ``v`` (does not assign it)."""
        return self._sample(v)[0]

    def _sample(self, v: int) -> tuple[int, int, int]:
        """Returns ``(color, palette attempts, work units)``."""
        st = self.state
        used = st.used[v]
        higher = st.nb_gt[v]
        color = st.color
        stats = self.stats
        if self.check_palette:
            universe, palette = st.palette_sizes(v)
            if 2 * palette < universe or 2 * palette < st.palette_size - st.d_le[v]:
                stats.palette_violations += 1
        attempts = 0
        work = 0
        rng = self._rng
        while True:
            c = used.sample_empty(rng)
            attempts += 1
            work += used.sampler.last_attempts + len(higher)
            count = 0
            for w in higher:
                if color[w] == c:
                    count += 1
            if count <= 1:
                break
        stats.palette_calls += 1
        stats.palette_attempts += attempts
        return c, attempts, work

    def is_proper(self) -> bool:
        return self.state.is_proper()

    def uncolored(self) -> list[int]:
        return [v for v, c in enumerate(self.state.color) if c == UNCOLORED]
