"""Metrics CSV files and their aggregation.

The first line is a version comment carrying the run parameters, the second
the column header; then one row per update (seq, deamortized) or per batch or
round (batch, congest).  For batch and congest rows ``update_index`` is the
cumulative number of updates applied up to and including that row.
``properness_ok`` is ``1``, ``0`` or ``-`` when the row was not checked.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import SchemaError

VERSION = "dyncolor-metrics v1"
COLUMNS = (
    "update_index", "mode", "work_units", "chain_length", "rounds",
    "tokens_created", "messages", "properness_ok", "segment",
)


@dataclass
class MetricsRow:
    update_index: int
    mode: str
    work_units: int
    chain_length: int = 0
    rounds: int = 0
    tokens_created: int = 0
    messages: int = 0
    properness_ok: str = "-"
    segment: str = "churn"  # or "warmup"


@dataclass
class MetricsFile:
    n: int
    delta: int
    mode: str
    rows: list[MetricsRow]


def dumps(mf: MetricsFile) -> str:
    out = io.StringIO()
    out.write(f"# {VERSION} n={mf.n} delta={mf.delta} mode={mf.mode}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in mf.rows:
        w.writerow(astuple(row))
    return out.getvalue()


def write(path: str | Path, mf: MetricsFile) -> None:
    Path(path).write_text(dumps(mf))


def loads(text: str, source: str = "<string>") -> MetricsFile:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# {VERSION}"):
        raise SchemaError(f"{source}: missing '# {VERSION}' line")
    meta = dict(p.split("=", 1) for p in lines[0].split()[3:] if "=" in p)
    try:
        n, delta, mode = int(meta["n"]), int(meta["delta"]), meta["mode"]
    except (KeyError, ValueError):
        raise SchemaError(f"{source}: malformed version line") from None
    reader = csv.reader(lines[1:])
    header = next(reader, None)
    if header is None or tuple(header) != COLUMNS:
        raise SchemaError(f"{source}: header {header} does not match {list(COLUMNS)}")
    types = [f.type for f in fields(MetricsRow)]
    rows = []
    for i, rec in enumerate(reader, 3):
        if len(rec) != len(COLUMNS):
            raise SchemaError(f"{source}: line {i} has {len(rec)} fields")
        try:
            vals = [int(x) if t in (int, "int") else x for x, t in zip(rec, types)]
        except ValueError:
            raise SchemaError(f"{source}: line {i} has a non-integer count") from None
        rows.append(MetricsRow(*vals))
    if not rows:
        raise SchemaError(f"{source}: no data rows")
    return MetricsFile(n, delta, mode, rows)


def read(path: str | Path) -> MetricsFile:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise SchemaError(f"cannot read {path}: {err}") from None
    return loads(text, str(path))


@dataclass
class Summary:
    source: str
    n: int
    delta: int
    mode: str
    rows: int
    updates: int
    mean_work: float
    p50_work: float
    p99_work: float
    max_work: int
    chain_hist: dict[int, int]
    mean_rounds: float
    max_rounds: int
    tokens: int
    mean_messages: float
    messages_per_update: float
    violations: int

    @property
    def rounds_per_log_n(self) -> float:
        return self.max_rounds / math.log2(self.n) if self.n > 1 else 0.0


def summarize(mf: MetricsFile, source: str = "", *, include_warmup: bool = False) -> Summary:
    rows = [r for r in mf.rows if include_warmup or r.segment != "warmup"] or mf.rows
    work = np.array([r.work_units for r in rows], dtype=float)
    rounds = [r.rounds for r in rows]
    messages = [r.messages for r in rows]
    tokens = sum(r.tokens_created for r in rows)
    if mf.mode in ("batch", "congest"):
        first = mf.rows.index(rows[0])
        before = mf.rows[first - 1].update_index if first else 0
        updates = rows[-1].update_index - before
    else:
        updates = len(rows)
    return Summary(
        source=source,
        n=mf.n,
        delta=mf.delta,
        mode=mf.mode,
        rows=len(rows),
        updates=updates,
        mean_work=float(work.mean()),
        p50_work=float(np.percentile(work, 50)),
        p99_work=float(np.percentile(work, 99)),
        max_work=int(work.max()),
        chain_hist=dict(sorted(Counter(r.chain_length for r in rows).items())),
        mean_rounds=float(np.mean(rounds)),
        max_rounds=max(rounds),
        tokens=tokens,
        mean_messages=float(np.mean(messages)),
        messages_per_update=sum(messages) / updates if updates else 0.0,
        violations=sum(1 for r in rows if r.properness_ok == "0"),
    )


def delta_scaling(summaries: Sequence[Summary]) -> list[tuple[int, float, float]]:
    """``(delta, mean work, ratio to the smallest delta)`` per distinct delta."""
    by_delta: dict[int, list[float]] = defaultdict(list)
    for s in summaries:
        by_delta[s.delta].append(s.mean_work)
    out = []
    base = None
    for d in sorted(by_delta):
        m = float(np.mean(by_delta[d]))
        base = m if base is None else base
        out.append((d, m, m / base if base else math.nan))
    return out


def format_report(summaries: Iterable[Summary]) -> str:
    summaries = list(summaries)
    out = io.StringIO()
    out.write("source,mode,n,delta,rows,mean_work,p50_work,p99_work,max_work,"
              "max_rounds,rounds_per_log2n,tokens,messages_per_update,violations\n")
    for s in summaries:
        out.write(
            f"{s.source},{s.mode},{s.n},{s.delta},{s.rows},{s.mean_work:.3f},{s.p50_work:.1f},"
            f"{s.p99_work:.1f},{s.max_work},{s.max_rounds},{s.rounds_per_log_n:.3f},"
            f"{s.tokens},{s.messages_per_update:.3f},{s.violations}\n"
        )
    out.write("\nchain length histogram\n")
    for s in summaries:
        hist = " ".join(f"{k}:{v}" for k, v in s.chain_hist.items())
        out.write(f"{s.source}: {hist}\n")
    if len({s.delta for s in summaries}) > 1:
        out.write("\ndelta,mean_work,ratio\n")
        for d, m, r in delta_scaling(summaries):
            out.write(f"{d},{m:.3f},{r:.3f}\n")
    if len({s.n for s in summaries}) > 1:
        out.write("\nn,messages_per_update\n")
        for s in sorted(summaries, key=lambda s: s.n):
            out.write(f"{s.n},{s.messages_per_update:.3f}\n")
    return out.getvalue()
