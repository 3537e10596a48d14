import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyncolor import cli, metrics
from dyncolor.batch_engine import BatchEngine
from dyncolor.core_state import ColoringState
from dyncolor.errors import SchemaError, WorkloadError
from dyncolor.workload import PROFILES, gen_drop_storm, gen_workload, loads


def test_insert_only_is_a_static_instance():
    n, delta = 400, 16
    wl = gen_workload("insert-only", n, delta, n * delta // 4, seed=1)
    assert wl.num_updates == n * delta // 4
    assert all(kind == "insert" for _, _, kind in wl.updates())
    eng = BatchEngine(n, delta, seed=2)
    tr = eng.add_edge_batch([(u, v) for u, v, _ in wl.updates()])
    assert not tr.rejected and eng.is_proper()


@pytest.mark.parametrize("profile", PROFILES)
def test_profiles_are_valid_streams(profile):
    events = 200 if profile == "insert-only" else 3000
    wl = gen_workload(profile, 300, 12, events, seed=4)
    again = loads(wl.dumps())  # the parser checks every event against the graph
    assert again.events == wl.events


def test_same_seed_same_bytes():
    a = gen_workload("hotspot", 200, 8, 1000, seed=7, mode="batch", batch_size=16).dumps()
    b = gen_workload("hotspot", 200, 8, 1000, seed=7, mode="batch", batch_size=16).dumps()
    c = gen_workload("hotspot", 200, 8, 1000, seed=8, mode="batch", batch_size=16).dumps()
    assert a == b and a != c


def test_infeasible_density():
    with pytest.raises(WorkloadError):
        gen_workload("insert-only", 100, 4, 101, seed=0)
    with pytest.raises(WorkloadError):
        gen_workload("random-churn", 100, 4, 10, warmup=500)
    with pytest.raises(WorkloadError):
        gen_workload("sideways", 100, 4, 10)


@pytest.mark.parametrize(
    "text, line",
    [
        ("workload n=3 delta=2\n+ 0 1\n+ 0 x\n", 3),
        ("# c\nworkload n=3 delta=2\n+ 0 1\n+ 1 0\n", 4),
        ("workload n=3 delta=2\n- 0 1\n", 2),
        ("workload n=3 delta=1\n+ 0 1\n+ 0 2\n", 3),
        ("workload n=3 delta=2\n* 0 1\n", 2),
        ("+ 0 1\n", 1),
        ("workload n=3 delta=2\n+ 0 5\n", 2),
        ("workload n=3 delta=2\nF 1\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(WorkloadError) as err:
        loads(text)
    assert err.value.line == line
    assert f"line {line}:" in str(err.value)


@given(st.integers(0, 2**31), st.sampled_from(["seq", "batch", "congest"]))
@settings(max_examples=15, deadline=None)
def test_roundtrip(seed, mode):
    wl = gen_workload("random-churn", 40, 4, 50, seed=seed, mode=mode, batch_size=5)
    back = loads(wl.dumps())
    assert (back.n, back.delta, back.mode, back.seed, back.warmup) == (40, 4, mode, seed, wl.warmup)
    assert back.events == wl.events


def test_drop_storm_is_valid_congest_stream():
    wl = gen_drop_storm(128, 8, 20, seed=1)
    assert wl.mode == "congest"
    assert sum(ev == ("F",) for ev in wl.events) == 1 + 20 * 10
    loads(wl.dumps())


# -- CLI ---------------------------------------------------------------------------


@pytest.fixture
def churn_file(tmp_path):
    path = tmp_path / "w.txt"
    assert cli.main(["gen", "--n", "300", "--delta", "12", "--events", "3000", "--seed", "3",
                     "--out", str(path)]) == 0
    return path


def test_run_seq_with_verification(churn_file, tmp_path):
    out = tmp_path / "m.csv"
    assert cli.main(["run", str(churn_file), "--verify-every", "100", "--out", str(out)]) == 0
    mf = metrics.read(out)
    assert mf.mode == "seq" and len(mf.rows) == 300 * 12 // 4 + 3000
    assert {r.properness_ok for r in mf.rows} == {"1", "-"}


def test_pipeline_is_deterministic_and_verification_is_read_only(churn_file, tmp_path):
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    cli.main(["run", str(churn_file), "--seed", "5", "--out", str(a)])
    cli.main(["run", str(churn_file), "--seed", "5", "--out", str(b)])
    cli.main(["run", str(churn_file), "--seed", "5", "--verify-every", "7", "--out", str(c)])
    assert a.read_bytes() == b.read_bytes()
    strip = lambda p: [r.__dict__ | {"properness_ok": ""} for r in metrics.read(p).rows]  # noqa: E731
    assert strip(a) == strip(c)


def test_run_all_modes(tmp_path, caplog):
    base = ["--n", "200", "--delta", "8", "--seed", "2"]
    for mode, extra in [("batch", ["--batch-size", "20", "--events", "500"]),
                        ("congest", ["--events", "200"]),
                        ("deamortized", ["--events", "500"])]:
        wl = tmp_path / f"{mode}.txt"
        assert cli.main(["gen", "--mode", mode, *base, *extra, "--out", str(wl)]) == 0
        out = tmp_path / f"{mode}.csv"
        args = ["-v", "run", str(wl), "--verify-every", "10", "--out", str(out)]
        if mode == "congest":
            args += ["--trace", str(tmp_path / "trace.txt")]
        with caplog.at_level(logging.INFO, logger="dyncolor"):
            assert cli.main(args) == 0
        assert metrics.read(out).mode == mode
    assert "token lifetimes" in caplog.text
    trace = (tmp_path / "trace.txt").read_text().splitlines()
    assert trace[0] == "round,epoch,phase,updates,tokens,preemptive,messages,proper"
    assert all(line.endswith(",ok") for line in trace[1:])


def test_batch_mode_requires_markers(churn_file, capsys):
    assert cli.main(["run", str(churn_file), "--mode", "batch"]) == 2
    assert "'F'" in capsys.readouterr().err


def test_corrupted_workload_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("workload n=4 delta=2\n+ 0 1\n+ 0 1\n")
    assert cli.main(["run", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_invariant_violation_writes_dump(churn_file, tmp_path, monkeypatch):
    monkeypatch.setattr(ColoringState, "is_proper", lambda self: False)
    out = tmp_path / "m.csv"
    assert cli.main(["run", str(churn_file), "--verify-every", "50", "--out", str(out)]) == 1
    dump = tmp_path / "m.dump"
    assert dump.exists() and len(dump.read_text().splitlines()) == 300


def test_usage_errors_exit_2(churn_file):
    with pytest.raises(SystemExit) as err:
        cli.main(["run", str(churn_file), "--mode", "quantum"])
    assert err.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["run", str(churn_file), "--budget", "-3"])


def test_report_reproduces_means(churn_file, tmp_path, capsys):
    out = tmp_path / "m.csv"
    cli.main(["run", str(churn_file), "--out", str(out)])
    mf = metrics.read(out)
    churn = [r.work_units for r in mf.rows if r.segment == "churn"]
    s = metrics.summarize(mf)
    assert s.mean_work == pytest.approx(sum(churn) / len(churn))
    capsys.readouterr()
    assert cli.main(["report", str(out)]) == 0
    assert f"{s.mean_work:.3f}" in capsys.readouterr().out


def test_report_delta_sweep_table(tmp_path, capsys):
    files = []
    for delta in (4, 8, 16):
        wl = tmp_path / f"w{delta}.txt"
        cli.main(["gen", "--n", "200", "--delta", str(delta), "--events", "800", "--out", str(wl)])
        out = tmp_path / f"m{delta}.csv"
        cli.main(["run", str(wl), "--out", str(out)])
        files.append(str(out))
    capsys.readouterr()
    assert cli.main(["report", *files]) == 0
    text = capsys.readouterr().out
    assert "delta,mean_work,ratio" in text
    rows = text.split("delta,mean_work,ratio\n")[1].strip().splitlines()
    assert [r.split(",")[0] for r in rows] == ["4", "8", "16"]
    assert rows[0].endswith(",1.000")


def test_empty_metrics_file_is_schema_error(tmp_path, capsys):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert cli.main(["report", str(empty)]) == 2
    with pytest.raises(SchemaError):
        metrics.loads(f"# {metrics.VERSION} n=1 delta=1 mode=seq\nwrong,header\n")
    with pytest.raises(SchemaError):
        metrics.loads(f"# {metrics.VERSION} n=1 delta=1 mode=seq\n" + ",".join(metrics.COLUMNS) + "\n")
