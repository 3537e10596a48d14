"""Round-based simulator of the batch-dynamic coloring in the dynamic CONGEST model.

Nodes are isolated state machines.  In every synchronous round the adversary
may insert or delete edges; messages sent in round ``r`` over an edge are
delivered at round ``r + 1`` only if the edge still exists then.  Rounds are
grouped into epochs of ten; the phase of round ``r`` is ``r % 10 + 1``.

Per node and epoch:

* phase 1: pending insertions are frozen into a to-do list and each endpoint
  sends its ``(level, color, timestamp)`` across the new edge;
* phase 2: the deletion lottery runs, received insertions enter the local
  views, a monochromatic new edge gives a token to the endpoint with the
  newer timestamp, and token holders withdraw their color and inquire their
  higher-or-equal neighbours;
* phases 3-9: inquiry replies, palette sampling (4), color exchange (5-6),
  token-token conflict detection (7-8), commit with an optional hand-off of
  the token to the single clashing higher neighbour (8), and application of
  the commit messages (9).

Insertions arriving outside phase 2 mark their endpoints with a preemptive
token until the next phase 2 processes them.  A node is a token holder while
it has a regular or preemptive token, or while a hand-off to it is in
flight; the colored, token-free part of the graph is checked for
properness at the end of every round.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ._rng import derive_rng
from .core_state import UNCOLORED, EdgeIndex, EdgeKind, conflicting_edges, num_levels, sample_level
from .errors import DegreeOverflow, DuplicateEdge, LoopEdge, MissingEdge, VertexOutOfRange
from .sampler import UsedColors

EPOCH = 10


class Token(IntEnum):
    FALSE = 0
    TRUE = 1
    PENDING = 2


class Tag(IntEnum):
    INFO = 1  # phase 1: level, color, timestamp across a new edge
    INQUIRE = 2  # phase 2: inquiry; flag = "drop my color from your sampler"
    REPLY = 3  # phase 3: level, color, flag = has token
    ASK_COLOR = 4  # phase 4
    COLOR = 5  # phase 5: color, flag = has token
    SET_TOKEN = 6  # phase 7
    COMMIT = 7  # phase 8: color to insert; flag = take over my token


@dataclass(frozen=True, slots=True)
class Message:
    """Fixed small record: a tag plus at most three O(log n)-bit integers and a bit."""

    tag: Tag
    level: int = 0
    color: int = 0
    timestamp: int = 0
    flag: bool = False


@dataclass
class RoundReport:
    round: int
    epoch: int
    phase: int
    updates: int
    tokens: int
    preemptive: int
    messages: int
    dropped: int
    new_tokens: int
    proper: bool
    work: int = 0

    def trace_line(self) -> str:
        return (
            f"{self.round},{self.epoch},{self.phase},{self.updates},{self.tokens},"
            f"{self.preemptive},{self.messages},{'ok' if self.proper else 'VIOLATION'}"
        )


TRACE_HEADER = "round,epoch,phase,updates,tokens,preemptive,messages,proper"


@dataclass
class MessageStats:
    total: int
    dropped: int
    updates: int
    per_update: float
    per_attempt: Counter = field(default_factory=Counter)


class Node:
    """Local state of one network node: its attributes, neighbour views and protocol registers."""

    def __init__(self, vid: int, level: int, color: int, universe: int, rng: random.Random):
        self.id = vid
        self.level = level
        self.color = color
        self.timestamp = 0
        self.rng = rng
        self.has_token = Token.FALSE
        self.has_preemptive = False
        # views
        self.nbr_level: dict[int, int] = {}
        self.nb_ge: set[int] = set()
        self.nb_gt: set[int] = set()
        self.d_le = 0
        self.lower_color: dict[int, int] = {}
        self.used = UsedColors(universe)
        # update registers
        self.b_ins: set[int] = set()
        self.todo: set[int] = set()
        self.gap = 0
        self.gap_ids: list[int] = []
        # per-attempt knowledge about neighbours
        self.info_token: dict[int, bool] = {}
        self.info_color: dict[int, int] = {}
        # cause of the most recent token creation, for accounting
        self.charge: int | None = None

    def add_view(self, u: int, level: int, color: int) -> None:
        self.nbr_level[u] = level
        if level >= self.level:
            self.nb_ge.add(u)
            if level > self.level:
                self.nb_gt.add(u)
        if level <= self.level:
            self.d_le += 1
            if color != UNCOLORED:
                self.lower_color[u] = color
                self.used.add(color)

    def drop_view(self, u: int) -> bool:
        """Forget neighbour ``u``; returns True if it counted towards ``d_le``."""
        level = self.nbr_level.pop(u)
        self.nb_ge.discard(u)
        self.nb_gt.discard(u)
        self.info_token.pop(u, None)
        self.info_color.pop(u, None)
        self.forget_color(u)
        if level <= self.level:
            self.d_le -= 1
            return True
        return False

    def forget_color(self, u: int) -> None:
        c = self.lower_color.pop(u, None)
        if c is not None:
            self.used.remove(c)

    def remember_color(self, u: int, c: int) -> None:
        self.forget_color(u)
        if c != UNCOLORED:
            self.lower_color[u] = c
            self.used.add(c)

    @property
    def holds_token(self) -> bool:
        return self.has_token != Token.FALSE or self.has_preemptive

    @property
    def idle(self) -> bool:
        return not (self.holds_token or self.b_ins or self.todo or self.gap)


class CongestSimulator:
    """Deterministic synchronous simulator; see the module docstring for the protocol.

    Args:
        n, delta, seed: network size, degree bound and root seed.
        check: run the end-of-round properness and token-accounting checks.
        shuffle: optional RNG permuting node execution order each round.
    """

    def __init__(
        self,
        n: int,
        delta: int,
        seed: int = 0,
        *,
        check: bool = True,
        shuffle: random.Random | None = None,
        levels: list[int] | None = None,
        colors: list[int] | None = None,
    ):
        if n < 1 or delta < 1:
            raise ValueError("n and delta must be at least 1")
        self.n = n
        self.delta = delta
        self.universe = delta + 1
        self.top_level = num_levels(delta)
        if levels is None:
            lrng = derive_rng(seed, "levels")
            levels = [sample_level(lrng, self.top_level) for _ in range(n)]
        if colors is None:
            crng = derive_rng(seed, "colors")
            colors = [crng.randint(1, self.universe) for _ in range(n)]
        self.nodes = [
            Node(v, levels[v], colors[v], self.universe, derive_rng(seed, "node", v)) for v in range(n)
        ]
        self.check = check
        self.shuffle = shuffle
        self.round = 0
        self.adj: list[set[int]] = [set() for _ in range(n)]
        self.edges = EdgeIndex(n)
        self._outbox: dict[tuple[int, int], Message] = {}
        self._busy: set[int] = set()
        self._update_id = 0
        self._charges: Counter = Counter()
        self._born: dict[int, int] = {}
        self._handoff: dict[int, int] = {}  # in-flight hand-off target -> source
        self._attempt_msgs: Counter = Counter()
        # accounting
        self.total_messages = 0
        self.total_dropped = 0
        self.total_updates = 0
        self.total_work = 0
        self.tokens_created = 0
        self.uncharged_tokens = 0
        self.violations = 0
        self.lifetimes: list[int] = []
        self.handoffs: list[tuple[int, int, int]] = []  # (round, from, to)
        self.naive_round_bound_failures = 0
        self.cumulative_bound_failures = 0

    # -- clock ---------------------------------------------------------------

    @property
    def epoch(self) -> int:
        return self.round // EPOCH

    @property
    def phase(self) -> int:
        return self.round % EPOCH + 1

    # -- update handling ------------------------------------------------------

    def _validate(self, updates: Sequence[tuple[int, int, EdgeKind]]) -> None:
        n, delta = self.n, self.delta
        added: dict[tuple[int, int], bool] = {}
        deg: dict[int, int] = {}
        touches: Counter = Counter()
        for item in updates:
            if len(item) != 3 or item[2] not in ("insert", "delete"):
                raise ValueError(f"malformed update {item!r}")
            u, v, kind = item
            if not (0 <= u < n and 0 <= v < n):
                raise VertexOutOfRange(u, v, n)
            if u == v:
                raise LoopEdge(u, v)
            key = (min(u, v), max(u, v))
            touches[key] += 1
            if touches[key] > 2:
                raise ValueError(f"edge {key} updated more than twice in one round")
            present = added.get(key, v in self.adj[u])
            if kind == "insert":
                if present:
                    raise DuplicateEdge(u, v)
                for w in (u, v):
                    if deg.get(w, len(self.adj[w])) >= delta:
                        raise DegreeOverflow(u, v, w, delta)
                for w in (u, v):
                    deg[w] = deg.get(w, len(self.adj[w])) + 1
            else:
                if not present:
                    raise MissingEdge(u, v)
                for w in (u, v):
                    deg[w] = deg.get(w, len(self.adj[w])) - 1
            added[key] = kind == "insert"

    def _apply_updates(self, updates: Sequence[tuple[int, int, EdgeKind]]) -> tuple[dict, dict]:
        """Apply updates physically; returns per-node net insertions and deletions this round."""
        start: dict[tuple[int, int], tuple[bool, int]] = {}
        for u, v, kind in updates:
            key = (min(u, v), max(u, v))
            self._update_id += 1
            if key not in start:
                start[key] = (v in self.adj[u], self._update_id)
            if kind == "insert":
                self.adj[u].add(v)
                self.adj[v].add(u)
                self.edges.add(u, v)
            else:
                self.adj[u].discard(v)
                self.adj[v].discard(u)
                self.edges.remove(u, v)
        ins: dict[int, dict[int, int]] = defaultdict(dict)
        dels: dict[int, dict[int, int]] = defaultdict(dict)
        for (u, v), (was, uid) in start.items():
            now = v in self.adj[u]
            if was == now:
                continue
            target = ins if now else dels
            target[u][v] = uid
            target[v][u] = uid
        return ins, dels

    # -- main loop -------------------------------------------------------------

    def step(self, updates: Iterable[tuple[int, int, EdgeKind]] = ()) -> RoundReport:
        """Run one synchronous round with the given ``(u, v, kind)`` updates."""
        updates = list(updates)
        self._validate(updates)
        phase, epoch = self.phase, self.epoch
        ins, dels = self._apply_updates(updates)
        self.total_updates += len(updates)

        inbox: dict[int, list[tuple[int, Message]]] = defaultdict(list)
        dropped = 0
        for (src, dst), msg in self._outbox.items():
            if dst in self.adj[src]:
                inbox[dst].append((src, msg))
            else:
                dropped += 1
        self._outbox = {}
        self.total_dropped += dropped
        handoff_arrivals = {w: v for w, v in self._handoff.items()}
        self._handoff = {}

        active = self._busy | set(inbox) | set(ins) | set(dels)
        order = sorted(active)
        if self.shuffle is not None:
            self.shuffle.shuffle(order)
        work = 0
        for v in order:
            node = self.nodes[v]
            msgs = sorted(inbox.get(v, ()), key=lambda item: item[0])
            work += self._run_node(node, phase, epoch, msgs, ins.get(v, {}), dels.get(v, {}))
            if node.idle:
                self._busy.discard(v)
            else:
                self._busy.add(v)
        self.total_work += work
        self.total_messages += len(self._outbox)

        report = self._census(phase, epoch, len(updates), dropped, handoff_arrivals)
        report.work = work
        self.round += 1
        return report

    def run(self, schedule: Iterable[Iterable[tuple[int, int, EdgeKind]]]) -> list[RoundReport]:
        return [self.step(r) for r in schedule]

    def quiesce(self, max_rounds: int = 10_000) -> int:
        """Run empty rounds until no token is left; returns the number of rounds used."""
        for i in range(max_rounds):
            if not self._busy and not self._outbox:
                return i
            self.step(())
        raise RuntimeError(f"tokens still present after {max_rounds} quiet rounds")

    # -- node program ------------------------------------------------------------

    def _send(self, src: int, dst: int, msg: Message) -> None:
        key = (src, dst)
        if key in self._outbox:
            raise AssertionError(f"second message on {key} in round {self.round}")
        if not (
            0 <= msg.level <= self.top_level
            and 0 <= msg.color <= self.universe
            and 0 <= msg.timestamp <= self.round // EPOCH + 1
        ):
            raise AssertionError(f"message {msg} does not fit the record schema")
        self._outbox[key] = msg

    def _set_token(self, node: Node, charge: int | None) -> None:
        if not node.holds_token:
            node.charge = charge
        node.has_token = Token.TRUE

    def _run_node(
        self,
        node: Node,
        phase: int,
        epoch: int,
        inbox: list[tuple[int, Message]],
        ins: dict[int, int],
        dels: dict[int, int],
    ) -> int:
        work = len(inbox)
        v = node.id
        # deletions are applied to the views at once; their lottery waits for phase 2
        lost: list[int] = []
        for u, uid in sorted(dels.items()):
            work += 1
            if u in node.b_ins:
                node.b_ins.discard(u)  # inserted and deleted before being processed
            elif u in node.nbr_level:
                if node.drop_view(u):
                    lost.append(uid)
            # otherwise u sits in the to-do list and its phase-1 message will be dropped
        for u, uid in sorted(ins.items()):
            node.b_ins.add(u)
            if not node.holds_token:
                node.charge = uid
            if phase != 2:
                node.has_preemptive = True

        if phase == 1:
            node.todo = node.b_ins
            node.b_ins = set()
            for u in sorted(node.todo):
                self._send(v, u, Message(Tag.INFO, node.level, node.color, node.timestamp))
            work += len(node.todo)

        elif phase == 2:
            if node.gap and node.has_token == Token.FALSE:
                p = node.gap / max(1, self.universe - node.d_le)
                if node.rng.random() < p:
                    self._set_token(node, node.gap_ids[0])
                work += 1
            node.gap = 0
            node.gap_ids = []
            infos = {src: m for src, m in inbox if m.tag == Tag.INFO}
            todo = [u for u in sorted(node.todo) if u in infos]
            for u in todo:
                m = infos[u]
                node.add_view(u, m.level, m.color)
            for u in todo:
                m = infos[u]
                if m.color != UNCOLORED and m.color == node.color and node.timestamp >= m.timestamp:
                    self._set_token(node, None)
            node.todo = set()
            work += len(todo)
            node.has_preemptive = bool(node.b_ins)
            if node.has_token == Token.TRUE:
                work += self._recolor_start(node)

        elif phase == 3:
            for src, m in inbox:
                if m.tag != Tag.INQUIRE:
                    continue
                if m.flag:
                    node.forget_color(src)
                self._send(
                    v, src,
                    Message(Tag.REPLY, node.level, node.color, 0, node.has_token == Token.TRUE),
                )
                self._attempt_msgs[(src, epoch)] += 2

        elif phase == 4 and node.has_token == Token.TRUE:
            for src, m in inbox:
                if m.tag == Tag.REPLY and src in node.nbr_level:
                    node.info_token[src] = m.flag
                    node.info_color[src] = m.color
            work += self._sample(node)
            for w in sorted(node.nb_ge):
                self._send(v, w, Message(Tag.ASK_COLOR))
            work += len(node.nb_ge)

        elif phase == 5:
            for src, m in inbox:
                if m.tag == Tag.ASK_COLOR:
                    self._send(
                        v, src, Message(Tag.COLOR, 0, node.color, 0, node.has_token == Token.TRUE)
                    )
                    self._attempt_msgs[(src, epoch)] += 2

        elif phase == 6 and node.has_token == Token.TRUE:
            for src, m in inbox:
                if m.tag == Tag.COLOR and src in node.nbr_level:
                    node.info_token[src] = m.flag
                    node.info_color[src] = m.color

        elif phase == 7 and node.has_token == Token.TRUE:
            node.has_token = Token.PENDING
            for w in sorted(node.nb_ge):
                if node.info_token.get(w) and node.info_color.get(w) == node.color:
                    self._send(v, w, Message(Tag.SET_TOKEN))
                    self._attempt_msgs[(v, epoch)] += 1
            work += len(node.nb_ge)

        elif phase == 8 and node.has_token == Token.PENDING:
            work += self._resolve(node, epoch, inbox)

        elif phase == 9:
            for src, m in inbox:
                if m.tag != Tag.COMMIT or src not in node.nbr_level:
                    continue
                node.remember_color(src, m.color)
                if m.flag:
                    node.has_token = Token.TRUE

        for uid in lost:
            node.gap += 1
            node.gap_ids.append(uid)
        return work

    def _recolor_start(self, node: Node) -> int:
        node.info_token = {}
        node.info_color = {}
        drop = node.color != UNCOLORED
        for w in sorted(node.nb_ge):
            self._send(node.id, w, Message(Tag.INQUIRE, 0, node.color, 0, drop))
        self._attempt_msgs[(node.id, self.epoch)] += len(node.nb_ge)
        node.color = UNCOLORED
        return len(node.nb_ge) + 1

    def _sample(self, node: Node) -> int:
        used, universe = node.used, self.universe
        info = node.info_color
        higher = [w for w in node.nb_gt if info.get(w, UNCOLORED) != UNCOLORED]
        work = 0
        while True:
            c = used.sample_empty(node.rng)
            work += used.sampler.last_attempts + len(higher)
            if sum(1 for w in higher if info[w] == c) <= 1:
                node.color = c
                return work

    def _resolve(self, node: Node, epoch: int, inbox: list[tuple[int, Message]]) -> int:
        c = node.color
        for w in node.nb_ge:
            if node.info_token.get(w) and node.info_color.get(w) == c:
                node.has_token = Token.TRUE
        if any(m.tag == Tag.SET_TOKEN for _, m in inbox):
            node.has_token = Token.TRUE
        if node.has_token == Token.TRUE:
            node.color = UNCOLORED
            return len(node.nb_ge) + 1
        node.has_token = Token.FALSE
        node.timestamp = epoch + 1
        conflict = None
        for w in sorted(node.nb_ge):
            if not node.info_token.get(w) and node.info_color.get(w) == c:
                conflict = w
        for w in sorted(node.nb_ge):
            self._send(node.id, w, Message(Tag.COMMIT, 0, c, 0, w == conflict))
        self._attempt_msgs[(node.id, epoch)] += len(node.nb_ge)
        if conflict is not None:
            self._handoff[conflict] = node.id
            self.handoffs.append((self.round, node.id, conflict))
        return 2 * len(node.nb_ge) + 1

    # -- end-of-round accounting -------------------------------------------------

    def holders(self) -> set[int]:
        held = {v for v in self._busy if self.nodes[v].holds_token}
        held.update(self._handoff)
        return held

    def _census(
        self, phase: int, epoch: int, num_updates: int, dropped: int, arrived: dict[int, int]
    ) -> RoundReport:
        held = self.holders()
        now = self.round
        born = self._born
        new_born: dict[int, int] = {}
        new_tokens = 0
        moved_from: dict[int, int] = {}
        for w, v in self._handoff.items():
            moved_from[w] = v
        for w in held:
            if w in born:
                b = born[w]
                src = moved_from.get(w)
                if src is not None and src in born:
                    b = min(b, born[src])
                new_born[w] = b
                continue
            src = moved_from.get(w)
            if src is not None and src in born:
                new_born[w] = born[src]
                continue
            if w in arrived and arrived[w] in born:
                new_born[w] = born[arrived[w]]
                continue
            new_born[w] = now
            new_tokens += 1
            charge = self.nodes[w].charge
            if charge is None:
                self.uncharged_tokens += 1
            else:
                self._charges[charge] += 1
                if self._charges[charge] > 2:
                    self.uncharged_tokens += 1
        continuing = {moved_from[w] for w in held if w in moved_from}
        survivors = set(new_born.values())
        for v, b in born.items():
            if v in held:
                continue
            if v in continuing and b in survivors:
                continue
            self.lifetimes.append(now - b + 1)
        self._born = new_born
        self.tokens_created += new_tokens
        if new_tokens > 2 * num_updates:
            self.naive_round_bound_failures += 1

        proper = True
        if self.check:
            proper = self.partial_properness_ok(held)
            if not proper:
                self.violations += 1
            if self.tokens_created > 2 * self.total_updates:
                self.cumulative_bound_failures += 1
        preemptive = sum(1 for v in self._busy if self.nodes[v].has_preemptive)
        return RoundReport(
            now, epoch, phase, num_updates, len(held), preemptive,
            len(self._outbox), dropped, new_tokens, proper,
        )

    def colors(self) -> list[int]:
        return [node.color for node in self.nodes]

    def partial_properness_ok(self, held: set[int] | None = None) -> bool:
        """Token-free nodes are colored and no edge between two of them is monochromatic."""
        if held is None:
            held = self.holders()
        mask = np.zeros(self.n, dtype=bool)
        if held:
            mask[list(held)] = True
        colors = self.colors()
        col = np.asarray(colors)
        if np.any((col == UNCOLORED) & ~mask):
            return False
        return len(conflicting_edges(self.edges, colors, mask)) == 0

    def is_fully_proper(self) -> bool:
        return not self.holders() and self.partial_properness_ok(set())

    def token_lifetimes(self, include_alive: bool = True) -> list[int]:
        out = list(self.lifetimes)
        if include_alive:
            out.extend(self.round - b for b in self._born.values())
        return out

    def message_audit(self) -> MessageStats:
        per_update = self.total_messages / self.total_updates if self.total_updates else 0.0
        hist = Counter(self._attempt_msgs.values())
        return MessageStats(
            self.total_messages, self.total_dropped, self.total_updates, per_update, hist
        )

    def view_consistency(self) -> list[str]:
        """Compare each node's view against the physical graph (valid at quiescent points)."""
        problems = []
        for node in self.nodes:
            v = node.id
            expected = self.adj[v] - node.b_ins - node.todo
            if set(node.nbr_level) != expected:
                problems.append(f"node {v}: view differs from physical adjacency")
                continue
            lv = node.level
            want_used: Counter = Counter()
            for w in expected:
                other = self.nodes[w]
                if other.level <= lv and other.color != UNCOLORED and node.lower_color.get(w) != other.color:
                    if not other.holds_token:
                        problems.append(f"node {v}: stale color for neighbour {w}")
                if w in node.lower_color:
                    want_used[node.lower_color[w]] += 1
            if dict(want_used) != node.used.counts():
                problems.append(f"node {v}: sampler multiset mismatch")
            d_le = sum(1 for w in expected if self.nodes[w].level <= lv)
            if d_le != node.d_le:
                problems.append(f"node {v}: d_le mismatch")
        return problems
