"""Batch-dynamic coloring: whole batches of insertions or deletions at once.

A batch first updates all structures.  Insertions put the later-colored
endpoint of every monochromatic new edge into the active set ``S``;
deletions put each vertex whose ``d_le`` dropped from ``old`` to ``new`` into
``S`` with probability ``(old - new) / (delta + 1 - new)``.  ``S`` is then
recolored in rounds:

1. active vertices that still hold a color withdraw it;
2. every active vertex samples its palette, counting only colored neighbours;
3. adjacent active vertices that drew the same color both retry next round;
4. the rest commit, and a colored higher-level neighbour that now clashes
   (there is at most one per vertex) becomes active for the next round.

Within a round every phase reads only the state left by the previous phase
and each vertex draws from its own random stream, so the processing order
of active vertices does not affect the outcome.
"""

from __future__ import annotations

import random
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_rng
from .core_state import UNCOLORED, ColoringState, EdgeKind
from .errors import InvalidUpdate
from .seq_engine import EngineStats


@dataclass
class UpdateBatch:
    kind: EdgeKind
    edges: list[tuple[int, int]]


@dataclass
class RecolorRound:
    round_index: int
    active_set: frozenset[int]
    sampled: dict[int, int]
    deferred: frozenset[int]
    handoffs: dict[int, int]  # new active vertex -> vertex whose commit displaced it


@dataclass
class BatchTrace:
    kind: EdgeKind
    batch_index: int
    applied: int = 0
    rejected: list[tuple[tuple[int, int], InvalidUpdate]] = field(default_factory=list)
    initial: frozenset[int] = frozenset()
    rounds: list[RecolorRound] = field(default_factory=list)
    chains: list[list[int]] = field(default_factory=list)  # level sequences
    work: int = 0
    boundary_violations: int = 0

    @property
    def num_rounds(self) -> int:
        return len(self.rounds)

    def climbs_ok(self, max_len: int) -> bool:
        return all(
            len(ch) <= max_len and all(a < b for a, b in zip(ch, ch[1:])) for ch in self.chains
        )


@dataclass
class BatchStats(EngineStats):
    batches: int = 0
    rounds: int = 0
    max_rounds: int = 0
    handoff_level_violations: int = 0
    small_palette_violations: int = 0
    boundary_violations: int = 0


class BatchEngine:
    """Batch-dynamic engine.

    Args:
        check_palette: count palette-size bound violations at every sample
            (half the colored universe, and at least 2 when an active
            neighbour exists).
        check_rounds: at each round boundary verify that the uncolored
            vertices are exactly the active set and the colored part is proper.
        shuffle: optional RNG used to permute the processing order of active
            vertices in every phase (for order-independence tests).
    """

    def __init__(
        self,
        n: int,
        delta: int,
        seed: int = 0,
        *,
        check_palette: bool = False,
        check_rounds: bool = False,
        shuffle: random.Random | None = None,
        levels: list[int] | None = None,
        colors: list[int] | None = None,
    ):
        self.state = ColoringState(n, delta, seed, levels=levels, colors=colors)
        self.seed = seed
        self.check_palette = check_palette
        self.check_rounds = check_rounds
        self.shuffle = shuffle
        self.stats = BatchStats()
        self.batch_index = 0
        self._rngs: dict[int, random.Random] = {}

    @property
    def n(self) -> int:
        return self.state.n

    @property
    def delta(self) -> int:
        return self.state.delta

    def _rng(self, v: int) -> random.Random:
        rng = self._rngs.get(v)
        if rng is None:
            rng = self._rngs[v] = derive_rng(self.seed, "batch-vertex", v)
        return rng

    def _order(self, vs: Iterable[int]) -> list[int]:
        out = sorted(vs)
        if self.shuffle is not None:
            self.shuffle.shuffle(out)
        return out

    # -- batch entry points --------------------------------------------------

    def apply(self, batch: UpdateBatch) -> BatchTrace:
        if batch.kind == "insert":
            return self.add_edge_batch(batch.edges)
        if batch.kind == "delete":
            return self.delete_edge_batch(batch.edges)
        raise ValueError(f"unknown batch kind {batch.kind!r}")

    def _structural(self, trace: BatchTrace, edges: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
        st = self.state
        done = []
        for u, v in edges:
            try:
                d = st.apply_edge_structural(u, v, trace.kind)
            except InvalidUpdate as err:
                trace.rejected.append(((u, v), err))
                continue
            trace.work += d.work
            done.append((u, v))
        trace.applied = len(done)
        return done

    def add_edge_batch(self, edges: Iterable[tuple[int, int]]) -> BatchTrace:
        self.batch_index += 1
        trace = BatchTrace("insert", self.batch_index)
        st = self.state
        color, ts = st.color, st.timestamp
        active: set[int] = set()
        for u, v in self._structural(trace, edges):
            if color[u] == color[v]:
                # the endpoint whose timestamp is not smaller joins; ties go to the larger id
                active.add(v if (ts[v], v) > (ts[u], u) else u)
        trace.work += trace.applied
        self._finish(trace, active)
        return trace

    def delete_edge_batch(self, edges: Iterable[tuple[int, int]]) -> BatchTrace:
        self.batch_index += 1
        trace = BatchTrace("delete", self.batch_index)
        st = self.state
        edges = list(edges)
        old: dict[int, int] = {}
        for u, v in edges:
            for w in (u, v):
                if 0 <= w < st.n and w not in old:
                    old[w] = st.d_le[w]
        self._structural(trace, edges)
        active = set()
        p1 = st.palette_size
        for w in sorted(old):
            new = st.d_le[w]
            drop = old[w] - new
            if drop > 0 and self._rng(w).random() * (p1 - new) < drop:
                active.add(w)
            trace.work += 1
        self._finish(trace, active)
        return trace

    def _finish(self, trace: BatchTrace, active: set[int]) -> None:
        trace.initial = frozenset(active)
        self.recolor_batch(active, trace)
        stats = self.stats
        stats.updates += trace.applied
        stats.batches += 1
        stats.work += trace.work
        stats.rounds += trace.num_rounds
        stats.max_rounds = max(stats.max_rounds, trace.num_rounds)
        stats.boundary_violations += trace.boundary_violations
        top = self.state.top_level
        for ch in trace.chains:
            stats.max_chain = max(stats.max_chain, len(ch))
            if len(ch) > top or any(a >= b for a, b in zip(ch, ch[1:])):
                stats.chain_violations += 1

    # -- rounds --------------------------------------------------------------

    def recolor_batch(self, active: Iterable[int], trace: BatchTrace | None = None) -> BatchTrace:
        """Recolor ``active`` until no vertex is left uncolored."""
        if trace is None:
            self.batch_index += 1
            trace = BatchTrace("insert", self.batch_index)
        st = self.state
        color, used, nb_ge, level = st.color, st.used, st.nb_ge, st.level
        stamp = self.batch_index
        S = set(active)
        chain_of = {v: i for i, v in enumerate(sorted(S))}
        chains = [[level[v]] for v in sorted(S)]
        r = 0
        while S:
            r += 1
            for v in self._order(S):
                if color[v] != UNCOLORED:
                    trace.work += 2 * st.uncolor(v) + 1
            if self.check_rounds:
                trace.boundary_violations += self._boundary_violations(S)

            sampled: dict[int, int] = {}
            for v in self._order(S):
                c, work = self._sample(v, S)
                sampled[v] = c
                trace.work += work

            deferred: set[int] = set()
            for v in self._order(S):
                c = sampled[v]
                for w in nb_ge[v]:
                    if w in S and sampled[w] == c:
                        deferred.add(v)
                        deferred.add(w)
                trace.work += len(nb_ge[v])

            survivors = self._order(S - deferred)
            for v in survivors:
                color[v] = sampled[v]
                st.timestamp[v] = stamp
            handoffs: dict[int, int] = {}
            for v in survivors:
                c = color[v]
                for w in nb_ge[v]:
                    if color[w] == c:
                        if level[w] <= level[v] or w in S:
                            self.stats.handoff_level_violations += 1
                        if w not in handoffs or v < handoffs[w]:
                            handoffs[w] = v
                    used[w].add(c)
                trace.work += 2 * len(nb_ge[v]) + 1
            self.stats.recolors += len(survivors)

            for w, v in sorted(handoffs.items()):
                i = chain_of[v]
                chain_of[w] = i
                chains[i].append(level[w])
            trace.rounds.append(
                RecolorRound(r, frozenset(S), sampled, frozenset(deferred), handoffs)
            )
            S = deferred | set(handoffs)
        if self.check_rounds:
            trace.boundary_violations += self._boundary_violations(set())
        trace.chains = chains
        return trace

    def _sample(self, v: int, active: set[int]) -> tuple[int, int]:
        st = self.state
        used = st.used[v]
        higher = st.nb_gt[v]
        color = st.color
        stats = self.stats
        if self.check_palette:
            universe, palette = st.palette_sizes(v)
            colored_le = sum(used.counts().values())
            if 2 * palette < universe or 2 * palette < st.palette_size - colored_le:
                stats.palette_violations += 1
            if palette < 2 and any(w in active for w in st.adj[v]):
                stats.small_palette_violations += 1
        rng = self._rng(v)
        attempts = 0
        work = 0
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
        return c, work

    def _boundary_violations(self, active: set[int]) -> int:
        st = self.state
        uncolored = {v for v, c in enumerate(st.color) if c == UNCOLORED}
        bad = 0 if uncolored == active else 1
        mask = np.zeros(st.n, dtype=bool)
        if active:
            mask[list(active)] = True
        if len(st.conflicts(mask)):
            bad += 1
        return bad

    def is_proper(self) -> bool:
        return self.state.is_proper()
