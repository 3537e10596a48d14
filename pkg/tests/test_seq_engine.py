import pytest
from helpers import brute_proper, random_stream
from hypothesis import given, settings
from hypothesis import strategies as st

from dyncolor.core_state import num_levels
from dyncolor.errors import MissingEdge
from dyncolor.seq_engine import SequentialEngine, drain


def test_different_colors_do_nothing():
    eng = SequentialEngine(2, 3, levels=[1, 1], colors=[1, 2])
    assert eng.add_edge(0, 1) is None
    assert eng.state.color == [1, 2]


def test_later_timestamp_is_recolored():
    eng = SequentialEngine(2, 3, levels=[1, 1], colors=[4, 4])
    eng.state.timestamp[:] = [3, 7]
    trace = eng.add_edge(0, 1)
    assert trace is not None and trace.chain[0].vertex == 1
    assert eng.state.color[0] == 4 and eng.state.color[1] != 4


@given(st.integers(0, 10_000), st.integers(2, 8))
@settings(max_examples=40, deadline=None)
def test_proper_after_every_update(seed, delta):
    n = 30
    eng = SequentialEngine(n, delta, seed=seed)
    for u, v, kind in random_stream(n, delta, 150, seed=seed + 1):
        eng.update(u, v, kind)
        assert brute_proper(n, eng.state.edges.edges(), eng.state.color)
    assert eng.stats.chain_violations == 0


def test_delete_lottery_only_for_lost_lower_neighbour():
    # u at level 2, v at level 5: only v loses a lower-or-equal neighbour
    recolored = set()
    for seed in range(300):
        eng = SequentialEngine(2, 16, seed=seed, levels=[2, 5], colors=[1, 2])
        eng.add_edge(0, 1)
        for tr in eng.delete_edge(0, 1):
            recolored.add(tr.chain[0].vertex)
    assert recolored == {1}


def test_equal_levels_both_run_lotteries():
    seen = set()
    for seed in range(400):
        eng = SequentialEngine(2, 1, seed=seed, levels=[1, 1], colors=[1, 2])
        eng.add_edge(0, 1)
        traces = eng.delete_edge(0, 1)  # d_le drops to 0, so each lottery fires with prob 1/2
        seen.update(tr.chain[0].vertex for tr in traces)
        if len(traces) == 2:
            break
    assert seen == {0, 1}


def test_deletion_lottery_rate_one_tenth():
    delta = 20
    leaves = delta - 8
    top = num_levels(delta)
    n = leaves + 1
    levels = [top] + [1] * leaves
    colors = [1] + list(range(2, leaves + 2))
    eng = SequentialEngine(n, delta, seed=77, levels=levels, colors=colors)
    for leaf in range(1, n):
        eng.add_edge(0, leaf)
    trials, hits = 100_000, 0
    for _ in range(trials):
        hits += sum(1 for tr in eng.delete_edge(0, 1) if tr.trigger == "delete-lottery")
        assert eng.state.d_le[0] == delta - 9
        eng.add_edge(0, 1)
    p = 1 / 10
    sigma = (trials * p * (1 - p)) ** 0.5
    assert abs(hits - trials * p) <= 3 * sigma


def test_isolated_recolor():
    eng = SequentialEngine(1, 9, seed=3)
    tr = eng.recolor(0)
    assert len(tr.chain) == 1 and 1 <= eng.color(0) <= 10
    assert tr.chain[0].sample_attempts == 1


def test_star_center_avoids_color_used_twice_above():
    leaves = 4
    levels = [1] + [2] * leaves
    colors = [1] + [5] * leaves
    eng = SequentialEngine(leaves + 1, 8, seed=0, levels=levels, colors=colors)
    for leaf in range(1, leaves + 1):
        eng.add_edge(0, leaf)
    for _ in range(2000):
        eng.recolor(0)
        assert eng.color(0) != 5


def test_checked_palette_and_attempts_on_random_graph():
    n, delta = 1500, 64
    eng = SequentialEngine(n, delta, seed=4, check_palette=True)
    lengths = []
    for u, v, kind in random_stream(n, delta, 40_000, seed=4, target=n * delta // 4):
        lengths.extend(len(t.chain) for t in eng.update(u, v, kind))
    s = eng.stats
    assert s.palette_violations == 0
    assert s.mean_attempts <= 3
    assert sum(lengths) / len(lengths) <= 3
    assert eng.is_proper()


def test_steps_yield_work_and_match_drained_result():
    ups = random_stream(60, 6, 400, seed=6)
    a = SequentialEngine(60, 6, seed=2)
    b = SequentialEngine(60, 6, seed=2)
    for u, v, kind in ups:
        a.update(u, v, kind)
        gen = b.steps(u, v, kind)
        total = 0
        try:
            while True:
                units = next(gen)
                assert units > 0
                total += units
        except StopIteration:
            pass
    assert a.state.snapshot() == b.state.snapshot()
    assert a.stats.work == b.stats.work


def test_invalid_update_changes_nothing():
    eng = SequentialEngine(5, 2, seed=0)
    eng.add_edge(0, 1)
    snap = eng.state.snapshot()
    with pytest.raises(MissingEdge):
        eng.steps(2, 3, "delete")
    with pytest.raises(MissingEdge):
        drain(eng.steps(3, 4, "delete"))
    assert eng.state.snapshot() == snap and eng.stats.updates == 1


def test_timestamps_strictly_increase():
    eng = SequentialEngine(200, 8, seed=1)
    last = 0
    for u, v, kind in random_stream(200, 8, 3000, seed=2):
        for tr in eng.update(u, v, kind):
            for link in tr.chain:
                t = eng.state.timestamp[link.vertex]
                assert t >= last
            last = max(eng.state.timestamp)
    stamped = [t for t in eng.state.timestamp if t]
    assert len(stamped) == len(set(stamped))
