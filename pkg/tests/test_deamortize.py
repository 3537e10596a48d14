import math

import pytest
from helpers import brute_proper, random_stream

from dyncolor.deamortize import DeamortizedColoring, default_budget, default_copies
from dyncolor.errors import DuplicateEdge, NoCleanCopy
from dyncolor.seq_engine import SequentialEngine


def test_defaults_scale_with_log_n():
    assert default_copies(4096) == 24
    assert default_budget(4096) == 768


def test_fresh_wrapper_answers_from_any_copy():
    dc = DeamortizedColoring(50, 4, seed=1, copies=3)
    assert dc.clean == {0, 1, 2}
    assert all(1 <= dc.query(v) <= 5 for v in range(50))
    assert all(cp.engine.state.num_edges == 0 for cp in dc.copies)


def test_copies_use_distinct_streams():
    dc = DeamortizedColoring(200, 8, seed=1, copies=6)
    seeds = {cp.seed for cp in dc.copies}
    levels = {tuple(cp.engine.state.level) for cp in dc.copies}
    assert len(seeds) == 6 and len(levels) == 6


def test_infinite_budget_equals_independent_engines():
    n, delta = 80, 6
    ups = random_stream(n, delta, 600, seed=3)
    dc = DeamortizedColoring(n, delta, seed=2, copies=3, budget=math.inf)
    refs = [SequentialEngine(n, delta, cp.seed) for cp in dc.copies]
    for u, v, kind in ups:
        dc.update(u, v, kind)
        assert dc.clean == {0, 1, 2}
        for ref in refs:
            ref.update(u, v, kind)
    for cp, ref in zip(dc.copies, refs):
        assert cp.engine.state.snapshot() == ref.state.snapshot()


def test_query_after_update_is_proper_for_that_copy():
    n, delta = 100, 8
    dc = DeamortizedColoring(n, delta, seed=5, copies=4, budget=40)
    for u, v, kind in random_stream(n, delta, 2000, seed=8):
        dc.update(u, v, kind)
        dc.query(u)
        st = dc.clean_copy().engine.state
        assert brute_proper(n, st.edges.edges(), st.color)


def test_budget_one_exhausts_all_copies():
    dc = DeamortizedColoring(10, 3, seed=0, copies=3, budget=1)
    dc.update(0, 1, "insert")
    assert not dc.has_clean_copy() and dc.stats.no_clean_events == 1
    with pytest.raises(NoCleanCopy):
        dc.query(0)


def test_drain_policy_recovers():
    dc = DeamortizedColoring(10, 3, seed=0, copies=3, budget=1, on_no_clean="drain")
    dc.update(0, 1, "insert")
    dc.update(2, 3, "insert")
    assert 1 <= dc.query(0) <= 4
    assert dc.has_clean_copy()


def test_suspension_gives_same_end_state():
    n, delta = 120, 10
    ups = random_stream(n, delta, 1500, seed=4)
    slow = DeamortizedColoring(n, delta, seed=9, copies=2, budget=3)
    fast = DeamortizedColoring(n, delta, seed=9, copies=2, budget=math.inf)
    for u, v, kind in ups:
        slow.update(u, v, kind)
        fast.update(u, v, kind)
    for cp in slow.copies:
        cp.finish()
    for a, b in zip(slow.copies, fast.copies):
        assert a.engine.state.snapshot() == b.engine.state.snapshot()


def test_prefix_consistency_with_oracle():
    n, delta = 90, 8
    dc = DeamortizedColoring(n, delta, seed=3, copies=4, budget=25)
    checked = 0
    for i, (u, v, kind) in enumerate(random_stream(n, delta, 1200, seed=5)):
        dc.update(u, v, kind)
        if i % 150 == 0:
            for idx in sorted(dc.clean):
                assert dc.matches_oracle(idx)
                checked += 1
    assert checked > 0


def test_structural_error_detected_before_enqueue():
    dc = DeamortizedColoring(5, 2, seed=0, copies=2, budget=2)
    dc.update(0, 1, "insert")
    backlog = [cp.backlog() for cp in dc.copies]
    with pytest.raises(DuplicateEdge):
        dc.update(1, 0, "insert")
    assert [cp.backlog() for cp in dc.copies] == backlog
    assert len(dc.history) == 1


def test_burst_on_one_vertex_keeps_a_clean_copy():
    n, delta = 600, 32
    dc = DeamortizedColoring(n, delta, seed=7)
    ups = []
    for round_ in range(40):
        for w in range(1, delta + 1):
            ups.append((0, w + round_ % 5, "insert"))
        for w in range(1, delta + 1):
            ups.append((0, w + round_ % 5, "delete"))
    for u, v, kind in ups:
        dc.update(u, v, kind)
        assert dc.has_clean_copy()


def test_rejects_bad_parameters():
    with pytest.raises(ValueError):
        DeamortizedColoring(5, 2, copies=0)
    with pytest.raises(ValueError):
        DeamortizedColoring(5, 2, budget=0)
    with pytest.raises(ValueError):
        DeamortizedColoring(5, 2, on_no_clean="ignore")
