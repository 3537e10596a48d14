"""Oblivious update streams: generation, text serialization and parsing.

A workload file is plain text, one event per line::

    # any comment
    workload n=1024 delta=32 mode=congest seed=7 profile=random-churn warmup=8192
    + 3 17
    - 3 17
    F

``+ u v`` inserts an edge, ``- u v`` deletes one and ``F`` closes a batch (or
a round in congest mode).  Streams are produced entirely from the workload
seed before any engine runs, so they cannot depend on engine randomness.
"""

from __future__ import annotations

import io
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .core_state import EdgeKind
from .errors import WorkloadError
from .sampler import MemberSampler

Mode = Literal["seq", "batch", "congest", "deamortized"]
Profile = Literal["random-churn", "insert-only", "delete-heavy", "hotspot"]
MODES: tuple[str, ...] = ("seq", "batch", "congest", "deamortized")
PROFILES: tuple[str, ...] = ("random-churn", "insert-only", "delete-heavy", "hotspot")
FLUSH = ("F",)

Event = tuple  # ("+", u, v) | ("-", u, v) | ("F",)


@dataclass
class Workload:
    n: int
    delta: int
    mode: str = "seq"
    seed: int = 0
    profile: str = "random-churn"
    warmup: int = 0  # number of leading update events that build the initial graph
    events: list[Event] = field(default_factory=list)

    def updates(self) -> Iterator[tuple[int, int, EdgeKind]]:
        for ev in self.events:
            if ev[0] != "F":
                yield ev[1], ev[2], "insert" if ev[0] == "+" else "delete"

    def chunks(self) -> Iterator[list[tuple[int, int, EdgeKind]]]:
        """Update lists delimited by ``F`` markers; a trailing unterminated chunk is included."""
        cur: list[tuple[int, int, EdgeKind]] = []
        for ev in self.events:
            if ev[0] == "F":
                yield cur
                cur = []
            else:
                cur.append((ev[1], ev[2], "insert" if ev[0] == "+" else "delete"))
        if cur:
            yield cur

    @property
    def num_updates(self) -> int:
        return sum(1 for ev in self.events if ev[0] != "F")

    def header(self) -> str:
        return (
            f"workload n={self.n} delta={self.delta} mode={self.mode} seed={self.seed} "
            f"profile={self.profile} warmup={self.warmup}"
        )

    def dumps(self) -> str:
        out = io.StringIO()
        out.write("# dyncolor workload v1\n")
        out.write(self.header() + "\n")
        for ev in self.events:
            out.write("F\n" if ev[0] == "F" else f"{ev[0]} {ev[1]} {ev[2]}\n")
        return out.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


# -- generation -----------------------------------------------------------


class _Graph:
    """Edge set with degree counts and a uniformly sampleable edge list."""

    def __init__(self, n: int, delta: int, rng: np.random.Generator):
        self.n, self.delta, self.rng = n, delta, rng
        self.adj: list[set[int]] = [set() for _ in range(n)]
        self.edges = MemberSampler()

    def __len__(self) -> int:
        return len(self.edges)

    def can_insert(self, u: int, v: int) -> bool:
        return (
            u != v
            and v not in self.adj[u]
            and len(self.adj[u]) < self.delta
            and len(self.adj[v]) < self.delta
        )

    def insert(self, u: int, v: int) -> Event:
        self.adj[u].add(v)
        self.adj[v].add(u)
        self.edges.add((min(u, v), max(u, v)))
        return ("+", u, v)

    def delete(self, u: int, v: int) -> Event:
        self.adj[u].discard(v)
        self.adj[v].discard(u)
        self.edges.remove((min(u, v), max(u, v)))
        return ("-", u, v)

    def random_insert(self, hot: np.ndarray | None = None, tries: int = 200) -> Event | None:
        rng, n = self.rng, self.n
        for _ in range(tries):
            if hot is not None:
                u = int(hot[rng.integers(len(hot))])
            else:
                u = int(rng.integers(n))
            v = int(rng.integers(n))
            if self.can_insert(u, v):
                return self.insert(u, v)
        return None

    def random_delete(self, hot: np.ndarray | None = None) -> Event | None:
        if not len(self.edges):
            return None
        rng = self.rng
        if hot is not None:
            for _ in range(20):
                u = int(hot[rng.integers(len(hot))])
                if self.adj[u]:
                    nbrs = sorted(self.adj[u])
                    return self.delete(u, nbrs[int(rng.integers(len(nbrs)))])
        u, v = self.edges[int(rng.integers(len(self.edges)))]
        return self.delete(u, v)


def _target_edges(n: int, delta: int) -> int:
    return n * delta // 4


def gen_workload(
    profile: str,
    n: int,
    delta: int,
    events: int,
    seed: int = 0,
    *,
    mode: str = "seq",
    warmup: int | None = None,
    batch_size: int = 1,
    rate: float = 4.0,
) -> Workload:
    """Generate a reproducible stream.

    Args:
        profile: ``random-churn`` (warm up to ``n * delta / 4`` edges, then 50/50
            churn), ``insert-only`` (``events`` insertions, at most ``n * delta / 4``),
            ``delete-heavy`` (warm-up, then three deletions per insertion on
            average) or ``hotspot`` (warm-up, then churn incident to ``n / 64``
            hot vertices).
        events: number of update events after warm-up (congest: number of churn rounds).
        warmup: warm-up insertions; defaults to the target edge count.
        batch_size: updates per ``F``-terminated chunk in batch mode.
        rate: mean updates per churn round in congest mode (Poisson).
    """
    if profile not in PROFILES:
        raise WorkloadError(f"unknown profile {profile!r}")
    if mode not in MODES:
        raise WorkloadError(f"unknown mode {mode!r}")
    if n < 2 or delta < 1 or events < 0:
        raise WorkloadError("need n >= 2, delta >= 1 and events >= 0")
    target = _target_edges(n, delta)
    rng = np.random.default_rng([seed, 0x5EED])
    g = _Graph(n, delta, rng)
    if profile == "insert-only":
        if events > target:
            raise WorkloadError(
                f"{events} insertions exceed the density target {target} (average degree delta/2)"
            )
        warm = 0
    else:
        warm = target if warmup is None else warmup
        if warm > target:
            raise WorkloadError(f"warm-up of {warm} edges exceeds the density target {target}")

    hot = None
    p_insert = 0.5
    if profile == "delete-heavy":
        p_insert = 0.25
    elif profile == "hotspot":
        hot = rng.choice(n, size=max(1, n // 64), replace=False)

    warm_events: list[Event] = []
    for _ in range(warm):
        ev = g.random_insert()
        if ev is None:
            break
        warm_events.append(ev)

    def churn_event(touched: set) -> Event | None:
        if profile == "insert-only":
            return g.random_insert()
        for _ in range(8):
            if rng.random() < p_insert or not len(g):
                ev = g.random_insert(hot)
            else:
                ev = g.random_delete(hot)
            if ev is None:
                continue
            key = (min(ev[1], ev[2]), max(ev[1], ev[2]))
            if key in touched:
                # undo and retry: congest rounds touch each edge at most once here
                if ev[0] == "+":
                    g.delete(ev[1], ev[2])
                else:
                    g.insert(ev[1], ev[2])
                continue
            touched.add(key)
            return ev
        return None

    out: list[Event] = []
    if mode == "congest":
        chunk = max(1, n // 4)
        for i in range(0, len(warm_events), chunk):
            out.extend(warm_events[i : i + chunk])
            out.append(FLUSH)
        for _ in range(events):
            touched: set = set()
            for _ in range(int(rng.poisson(rate))):
                ev = churn_event(touched)
                if ev is not None:
                    out.append(ev)
            out.append(FLUSH)
    else:
        body: list[Event] = list(warm_events)
        for _ in range(events):
            ev = churn_event(set())
            if ev is None:
                raise WorkloadError("generator could not find a valid update")
            body.append(ev)
        if mode == "batch":
            out = _chunk_batches(body, warm_events, batch_size)
        else:
            out = body
    return Workload(n, delta, mode, seed, profile, len(warm_events), out)


def _chunk_batches(body: list[Event], warm: list[Event], batch_size: int) -> list[Event]:
    if batch_size < 1:
        raise WorkloadError("batch size must be positive")
    out: list[Event] = []
    nwarm = len(warm)
    if nwarm:
        out.extend(body[:nwarm])
        out.append(FLUSH)
    rest = body[nwarm:]
    for i in range(0, len(rest), batch_size):
        out.extend(rest[i : i + batch_size])
        out.append(FLUSH)
    return out


def gen_drop_storm(n: int, delta: int, epochs: int, seed: int = 0, *, hot: int | None = None) -> Workload:
    """Congest workload that deletes edges at hot vertices in the middle of epochs.

    Every epoch inserts edges at the hot vertices while the insertions can
    still be processed (phase 1) and again late in the epoch (phases 9-10),
    and deletes hot edges during phases 3-8, when tokens created in phase 2
    are exchanging inquiries, samples and commits.  Deletions are spread over
    both endpoints' incident edges so dropped messages hit every phase.
    """
    rng = np.random.default_rng([seed, 0xD209])
    g = _Graph(n, delta, rng)
    k = hot if hot is not None else max(2, n // 64)
    hot_set = rng.choice(n, size=k, replace=False)
    warm: list[Event] = []
    for _ in range(_target_edges(n, delta)):
        ev = g.random_insert()
        if ev is None:
            break
        warm.append(ev)
    # hot vertices near full degree make lottery odds and clash rates high
    for u in hot_set:
        for _ in range(4 * delta):
            if len(g.adj[int(u)]) >= delta - 1:
                break
            v = int(rng.integers(n))
            if g.can_insert(int(u), v):
                warm.append(g.insert(int(u), v))
    out: list[Event] = list(warm) + [FLUSH]
    for _ in range(epochs):
        for phase in range(1, 11):
            touched: set = set()
            if phase in (1, 9, 10):
                count, insert = 6, True
            elif 3 <= phase <= 8:
                count, insert = 3, False
            else:
                count, insert = 2, True
            for _ in range(count):
                ev = g.random_insert(hot_set) if insert else g.random_delete(hot_set)
                if ev is None:
                    continue
                key = (min(ev[1], ev[2]), max(ev[1], ev[2]))
                if key in touched:
                    if ev[0] == "+":
                        g.delete(ev[1], ev[2])
                    else:
                        g.insert(ev[1], ev[2])
                    continue
                touched.add(key)
                out.append(ev)
            out.append(FLUSH)
    return Workload(n, delta, "congest", seed, "hotspot", len(warm), out)


# -- parsing ----------------------------------------------------------------


def _parse_header(line: str, lineno: int) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != "workload":
        raise WorkloadError("expected a 'workload key=value ...' header", lineno)
    fields: dict[str, str] = {}
    for p in parts[1:]:
        key, sep, val = p.partition("=")
        if not sep or not key:
            raise WorkloadError(f"bad header field {p!r}", lineno)
        fields[key] = val
    for key in ("n", "delta"):
        if key not in fields:
            raise WorkloadError(f"header lacks {key}=", lineno)
    return fields


def loads(text: str, *, validate: bool = True) -> Workload:
    """Parse a workload; errors carry the 1-based line number."""
    wl: Workload | None = None
    g: _Graph | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if wl is None:
            f = _parse_header(line, lineno)
            try:
                wl = Workload(
                    int(f["n"]), int(f["delta"]), f.get("mode", "seq"), int(f.get("seed", 0)),
                    f.get("profile", "custom"), int(f.get("warmup", 0)),
                )
            except ValueError as err:
                raise WorkloadError(f"bad header value: {err}", lineno) from None
            if wl.n < 1 or wl.delta < 1:
                raise WorkloadError("n and delta must be positive", lineno)
            if wl.mode not in MODES:
                raise WorkloadError(f"unknown mode {wl.mode!r}", lineno)
            g = _Graph(wl.n, wl.delta, np.random.default_rng(0))
            continue
        parts = line.split()
        op = parts[0]
        if op == "F":
            if len(parts) != 1:
                raise WorkloadError("'F' takes no arguments", lineno)
            wl.events.append(FLUSH)
            continue
        if op not in ("+", "-") or len(parts) != 3:
            raise WorkloadError(f"cannot parse event {line!r}", lineno)
        try:
            u, v = int(parts[1]), int(parts[2])
        except ValueError:
            raise WorkloadError(f"non-integer vertex in {line!r}", lineno) from None
        if validate:
            if not (0 <= u < wl.n and 0 <= v < wl.n):
                raise WorkloadError(f"vertex out of range in {line!r}", lineno)
            if u == v:
                raise WorkloadError("self-loop", lineno)
            present = v in g.adj[u]
            if op == "+":
                if present:
                    raise WorkloadError(f"duplicate insertion of ({u}, {v})", lineno)
                if len(g.adj[u]) >= wl.delta or len(g.adj[v]) >= wl.delta:
                    raise WorkloadError(f"insertion of ({u}, {v}) exceeds degree {wl.delta}", lineno)
                g.insert(u, v)
            else:
                if not present:
                    raise WorkloadError(f"deletion of absent edge ({u}, {v})", lineno)
                g.delete(u, v)
        wl.events.append((op, u, v))
    if wl is None:
        raise WorkloadError("empty workload: no header found")
    return wl


def load(path: str | Path) -> Workload:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise WorkloadError(f"cannot read {path}: {err}") from None
    return loads(text)
