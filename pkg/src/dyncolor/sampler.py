"""Color sets with uniform sampling from their complement.

Three layers:

* :class:`MemberSampler` keeps a set as an index <-> element pair of maps and
  samples a uniform member in O(1).
* :class:`ComplementSampler` keeps a "used" set ``S`` inside ``[1, U]`` and
  samples uniformly from ``[1, U] \\ S``.  While ``S`` is sparse it rejection
  samples; while it is dense it samples from an explicitly maintained
  complement that is filled in gradually as ``|S|`` grows, so every update
  touches O(1) colors.
* :class:`UsedColors` adds multiplicities on top, since several neighbours of
  a vertex may share one color.
"""

from __future__ import annotations

import random
from collections.abc import Iterable, Iterator

from .errors import AbsentInBatch, DuplicateInBatch, FullSet, OutOfRange, PresentInBatch

# Universes smaller than this skip the explicit complement and scan instead.
SMALL_UNIVERSE = 100


class MemberSampler:
    """Dynamic set with O(1) insert, delete and uniform member sampling."""

    __slots__ = ("_items", "_index")

    def __init__(self, items: Iterable[int] = ()):
        self._items: list[int] = []
        self._index: dict[int, int] = {}
        for x in items:
            self.add(x)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, x: int) -> bool:
        return x in self._index

    def __iter__(self) -> Iterator[int]:
        return iter(self._items)

    def __getitem__(self, i: int) -> int:
        return self._items[i]

    def add(self, x: int) -> bool:
        if x in self._index:
            return False
        self._index[x] = len(self._items)
        self._items.append(x)
        return True

    def remove(self, x: int) -> bool:
        i = self._index.pop(x, None)
        if i is None:
            return False
        last = self._items.pop()
        if last != x:
            self._items[i] = last
            self._index[last] = i
        return True

    def add_many(self, xs: Iterable[int]) -> None:
        for x in xs:
            self.add(x)

    def remove_many(self, xs: Iterable[int]) -> None:
        for x in xs:
            self.remove(x)

    def sample(self, rng: random.Random) -> int:
        if not self._items:
            raise FullSet("cannot sample from an empty set")
        return self._items[rng.randrange(len(self._items))]

    def check(self) -> bool:
        """True iff the two maps are exact inverses."""
        if len(self._items) != len(self._index):
            return False
        return all(self._index.get(x) == i for i, x in enumerate(self._items))


class ComplementSampler:
    """A set ``S`` of colors in ``[1, universe]``, sampled from its complement.

    For ``universe >= SMALL_UNIVERSE`` an explicit complement is kept equal to
    ``[1, window(|S|)] \\ S`` where ``window(m) = min(U, 4 * (m - ceil(U / 2)))``
    (clamped at 0).  The window is empty while ``S`` is at most half full and
    covers the whole universe once ``|S| >= 3U/4``, which is exactly when the
    sampler switches away from rejection sampling.

    ``ops`` counts mutating dictionary operations (on ``S`` and on the
    complement); ``attempts`` counts rejection-sampling draws.
    """

    __slots__ = ("universe", "_used", "_free", "_half", "ops", "attempts", "last_attempts")

    def __init__(self, universe: int, colors: Iterable[int] = ()):
        if universe < 1:
            raise ValueError("universe must be at least 1")
        self.universe = universe
        self._used: set[int] = set()
        self._free: MemberSampler | None = MemberSampler() if universe >= SMALL_UNIVERSE else None
        self._half = -(-universe // 2)
        self.ops = 0
        self.attempts = 0
        self.last_attempts = 0
        for c in colors:
            self.insert(c)

    def __len__(self) -> int:
        return len(self._used)

    def __contains__(self, c: int) -> bool:
        return c in self._used

    def __iter__(self) -> Iterator[int]:
        return iter(self._used)

    @property
    def uses_window(self) -> bool:
        return self._free is not None

    def window(self, size: int | None = None) -> int:
        """Upper end of the populated complement window for a set of ``size`` colors."""
        m = len(self._used) if size is None else size
        return max(0, min(self.universe, 4 * (m - self._half)))

    def complement_view(self) -> frozenset[int]:
        """Current contents of the explicit complement (empty for small universes)."""
        return frozenset(self._free) if self._free is not None else frozenset()

    def _check_range(self, c: int) -> None:
        if not 1 <= c <= self.universe:
            raise OutOfRange(f"color {c} outside [1, {self.universe}]")

    def insert(self, c: int) -> bool:
        """Add ``c``; returns False (and does nothing) if it was already present."""
        self._check_range(c)
        used = self._used
        if c in used:
            return False
        old = len(used)
        used.add(c)
        self.ops += 1
        free = self._free
        if free is not None:
            lo, hi = self.window(old), self.window(old + 1)
            if c <= lo and free.remove(c):
                self.ops += 1
            for x in range(lo + 1, hi + 1):
                if x not in used:
                    free.add(x)
                    self.ops += 1
        return True

    def delete(self, c: int) -> bool:
        """Remove ``c``; returns False (and does nothing) if it was absent."""
        self._check_range(c)
        used = self._used
        if c not in used:
            return False
        old = len(used)
        used.remove(c)
        self.ops += 1
        free = self._free
        if free is not None:
            lo, hi = self.window(old - 1), self.window(old)
            for x in range(lo + 1, hi + 1):
                if free.remove(x):
                    self.ops += 1
            if c <= lo:
                free.add(c)
                self.ops += 1
        return True

    def _validate_batch(self, cs: list[int], present: bool) -> None:
        seen: set[int] = set()
        for c in cs:
            self._check_range(c)
            if c in seen:
                raise DuplicateInBatch(f"color {c} repeated in batch")
            seen.add(c)
            if present and c not in self._used:
                raise AbsentInBatch(f"color {c} not in set")
            if not present and c in self._used:
                raise PresentInBatch(f"color {c} already in set")

    def insert_batch(self, cs: Iterable[int]) -> None:
        """Insert several colors at once; the batch is validated before anything changes."""
        cs = list(cs)
        self._validate_batch(cs, present=False)
        for c in cs:
            self.insert(c)

    def delete_batch(self, cs: Iterable[int]) -> None:
        cs = list(cs)
        self._validate_batch(cs, present=True)
        for c in cs:
            self.delete(c)

    def sample_empty(self, rng: random.Random) -> int:
        """Uniform color from ``[1, universe] \\ S``."""
        used = self._used
        u = self.universe
        m = len(used)
        if m >= u:
            raise FullSet(f"all {u} colors are used")
        if 4 * m <= 3 * u + 20:
            n = 0
            while True:
                n += 1
                c = rng.randint(1, u)
                if c not in used:
                    self.attempts += n
                    self.last_attempts = n
                    return c
        self.attempts += 1
        self.last_attempts = 1
        if self._free is not None:
            return self._free.sample(rng)
        free = [c for c in range(1, u + 1) if c not in used]
        return free[rng.randrange(len(free))]

    def expected_complement(self) -> frozenset[int]:
        """From-scratch value the explicit complement should hold."""
        if self._free is None:
            return frozenset()
        w = self.window()
        return frozenset(x for x in range(1, w + 1) if x not in self._used)

    def check(self) -> str | None:
        """Rebuild oracle; returns a description of the first mismatch, or None."""
        if self._free is None:
            return None
        if not self._free.check():
            return "member sampler maps are not inverse"
        got, want = self.complement_view(), self.expected_complement()
        if got != want:
            return f"complement mismatch: extra={sorted(got - want)} missing={sorted(want - got)}"
        return None


class UsedColors:
    """Multiset of colors in use, backed by a :class:`ComplementSampler` of its support."""

    __slots__ = ("_counts", "sampler")

    def __init__(self, universe: int):
        self._counts: dict[int, int] = {}
        self.sampler = ComplementSampler(universe)

    def __contains__(self, c: int) -> bool:
        return c in self._counts

    def __len__(self) -> int:
        """Number of distinct colors in use."""
        return len(self._counts)

    def count(self, c: int) -> int:
        return self._counts.get(c, 0)

    def counts(self) -> dict[int, int]:
        return dict(self._counts)

    def add(self, c: int) -> None:
        k = self._counts.get(c, 0)
        if k == 0:
            self.sampler.insert(c)
        self._counts[c] = k + 1

    def remove(self, c: int) -> None:
        k = self._counts[c]
        if k == 1:
            del self._counts[c]
            self.sampler.delete(c)
        else:
            self._counts[c] = k - 1

    def sample_empty(self, rng: random.Random) -> int:
        return self.sampler.sample_empty(rng)
