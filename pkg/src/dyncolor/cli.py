"""Command-line driver: ``dyncolor gen``, ``dyncolor run`` and ``dyncolor report``.

Exit status is 0 on success, 1 when an invariant check fails (a ``.dump``
file with the vertex states is written next to the metrics file) and 2 for
usage, parse and schema errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .batch_engine import BatchEngine, UpdateBatch
from .congest import TRACE_HEADER, CongestSimulator
from .core_state import ColoringState
from .deamortize import DeamortizedColoring
from .errors import InvalidUpdate, SchemaError, WorkloadError
from .metrics import MetricsFile, MetricsRow
from .seq_engine import SequentialEngine
from .workload import MODES, PROFILES, Workload, gen_workload, load

log = logging.getLogger("dyncolor")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class InvariantViolation(Exception):
    def __init__(self, message: str, dump: str):
        super().__init__(message)
        self.dump = dump


@dataclass
class RunConfig:
    mode: str
    seed: int = 0
    verify_every: int = 0
    budget: float | None = None
    copies: int | None = None
    trace: Path | None = None


def _verdict(cfg: RunConfig, index: int) -> bool:
    return cfg.verify_every > 0 and index % cfg.verify_every == 0


def _check_state(st: ColoringState, where: str) -> str:
    if not st.is_proper():
        raise InvariantViolation(f"{where}: coloring is not proper", st.dump())
    report = st.verify_consistency()
    if not report.ok:
        raise InvariantViolation(f"{where}: {report.first}", st.dump())
    return "1"


def run_seq(wl: Workload, cfg: RunConfig) -> list[MetricsRow]:
    eng = SequentialEngine(wl.n, wl.delta, cfg.seed, check_palette=cfg.verify_every > 0)
    rows = []
    for i, (u, v, kind) in enumerate(wl.updates(), 1):
        before = eng.stats.work
        traces = eng.update(u, v, kind)
        ok = "-"
        if _verdict(cfg, i):
            ok = _check_state(eng.state, f"update {i}")
        chain = max((len(t.chain) for t in traces), default=0)
        rows.append(MetricsRow(
            i, "seq", eng.stats.work - before, chain, 0, len(traces), 0, ok,
            "warmup" if i <= wl.warmup else "churn",
        ))
    st = eng.stats
    if st.palette_violations or st.chain_violations:
        raise InvariantViolation(
            f"{st.palette_violations} palette and {st.chain_violations} climb violations",
            eng.state.dump(),
        )
    _check_state(eng.state, "end of stream")
    return rows


def _runs(chunk: list[tuple[int, int, str]]) -> list[UpdateBatch]:
    out: list[UpdateBatch] = []
    for u, v, kind in chunk:
        if out and out[-1].kind == kind:
            out[-1].edges.append((u, v))
        else:
            out.append(UpdateBatch(kind, [(u, v)]))
    return out


def _require_flushes(wl: Workload) -> None:
    if not any(ev[0] == "F" for ev in wl.events):
        raise WorkloadError(f"mode {wl.mode!r} needs 'F' batch markers in the workload")


def run_batch(wl: Workload, cfg: RunConfig) -> list[MetricsRow]:
    _require_flushes(wl)
    eng = BatchEngine(
        wl.n, wl.delta, cfg.seed, check_palette=cfg.verify_every > 0, check_rounds=cfg.verify_every > 0
    )
    rows = []
    done = 0
    for i, chunk in enumerate(wl.chunks(), 1):
        work = rounds = tokens = chain = 0
        for batch in _runs(chunk):
            tr = eng.apply(batch)
            if tr.rejected:
                raise tr.rejected[0][1]
            work += tr.work
            rounds += tr.num_rounds
            tokens += len(tr.initial)
            chain = max([chain] + [len(c) for c in tr.chains])
        segment = "warmup" if done < wl.warmup else "churn"
        done += len(chunk)
        ok = _check_state(eng.state, f"batch {i}") if _verdict(cfg, i) else "-"
        rows.append(MetricsRow(done, "batch", work, chain, rounds, tokens, 0, ok, segment))
    st = eng.stats
    bad = st.palette_violations + st.chain_violations + st.boundary_violations
    bad += st.handoff_level_violations
    if bad:
        raise InvariantViolation(f"{bad} batch invariant violations", eng.state.dump())
    _check_state(eng.state, "end of stream")
    return rows


def _congest_dump(sim: CongestSimulator) -> str:
    lines = []
    for node in sim.nodes:
        c = "⊥" if node.color == 0 else node.color
        lines.append(f"{node.id} {node.level} {c} {node.timestamp} {int(node.has_token)} {int(node.has_preemptive)}")
    return "\n".join(lines) + "\n"


def run_congest(wl: Workload, cfg: RunConfig) -> list[MetricsRow]:
    _require_flushes(wl)
    sim = CongestSimulator(wl.n, wl.delta, cfg.seed)
    rows = []
    trace = [TRACE_HEADER] if cfg.trace else None
    done = 0
    chunks = list(wl.chunks())
    for chunk in chunks:
        segment = "warmup" if done < wl.warmup else "churn"
        rep = sim.step(chunk)
        done += len(chunk)
        if trace is not None:
            trace.append(rep.trace_line())
        if not rep.proper:
            raise InvariantViolation(f"round {rep.round}: partial properness violated", _congest_dump(sim))
        rows.append(MetricsRow(
            done, "congest", rep.work, 0, 1, rep.new_tokens, rep.messages, "1", segment,
        ))
    quiet = sim.quiesce()
    if trace is not None:
        cfg.trace.write_text("\n".join(trace) + "\n")
    if not sim.is_fully_proper():
        raise InvariantViolation("coloring not proper after quiescence", _congest_dump(sim))
    if sim.uncharged_tokens:
        raise InvariantViolation(f"{sim.uncharged_tokens} token creations exceed the charge bound", _congest_dump(sim))
    lt = sim.token_lifetimes()
    if lt:
        log.info(
            "token lifetimes: count=%d max=%d p99=%.1f mean=%.2f (rounds); quiescence after %d rounds",
            len(lt), max(lt), float(np.percentile(lt, 99)), float(np.mean(lt)), quiet,
        )
    return rows


def run_deamortized(wl: Workload, cfg: RunConfig) -> list[MetricsRow]:
    dc = DeamortizedColoring(wl.n, wl.delta, cfg.seed, copies=cfg.copies, budget=cfg.budget)
    rows = []
    for i, (u, v, kind) in enumerate(wl.updates(), 1):
        before = sum(cp.engine.stats.work for cp in dc.copies)
        dc.update(u, v, kind)
        work = sum(cp.engine.stats.work for cp in dc.copies) - before
        ok = "-"
        if _verdict(cfg, i):
            if not dc.has_clean_copy():
                raise InvariantViolation(f"update {i}: no clean copy", dc.copies[0].engine.state.dump())
            ok = _check_state(dc.clean_copy().engine.state, f"update {i}")
        rows.append(MetricsRow(
            i, "deamortized", work, 0, 0, 0, 0, ok, "warmup" if i <= wl.warmup else "churn",
        ))
    log.info("no-clean events: %d, max backlog: %d", dc.stats.no_clean_events, dc.stats.max_backlog)
    return rows


RUNNERS = {"seq": run_seq, "batch": run_batch, "congest": run_congest, "deamortized": run_deamortized}


def execute(wl: Workload, cfg: RunConfig) -> MetricsFile:
    rows = RUNNERS[cfg.mode](wl, cfg)
    return MetricsFile(wl.n, wl.delta, cfg.mode, rows)


# -- argument parsing ------------------------------------------------------------


def _budget(text: str) -> float:
    if text.lower() in ("inf", "infinite", "none"):
        return math.inf
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("budget must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dyncolor", description="Dynamic (delta+1)-coloring harness.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a workload file")
    g.add_argument("--profile", choices=PROFILES, default="random-churn")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--delta", type=int, required=True)
    g.add_argument("--events", type=int, required=True, help="churn events (congest: rounds)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mode", choices=MODES, default="seq")
    g.add_argument("--warmup", type=int, default=None, help="warm-up insertions")
    g.add_argument("--batch-size", type=int, default=1)
    g.add_argument("--rate", type=float, default=4.0, help="updates per congest round")
    g.add_argument("--out", type=Path, default=None, help="output file (default stdout)")

    r = sub.add_parser("run", help="execute a workload and write metrics")
    r.add_argument("workload", type=Path)
    r.add_argument("--mode", choices=MODES, default=None, help="default: the workload's mode")
    r.add_argument("--seed", type=int, default=0, help="engine seed")
    r.add_argument("--verify-every", type=int, default=0, metavar="N")
    r.add_argument("--budget", type=_budget, default=None, help="deamortized work budget or 'inf'")
    r.add_argument("--copies", type=int, default=None)
    r.add_argument("--trace", type=Path, default=None, help="congest per-round trace file")
    r.add_argument("--out", type=Path, default=None, help="metrics CSV (default stdout)")

    s = sub.add_parser("report", help="summarize metrics files")
    s.add_argument("files", type=Path, nargs="+")
    s.add_argument("--include-warmup", action="store_true")
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s"
    )
    try:
        if args.command == "gen":
            wl = gen_workload(
                args.profile, args.n, args.delta, args.events, args.seed, mode=args.mode,
                warmup=args.warmup, batch_size=args.batch_size, rate=args.rate,
            )
            _emit(wl.dumps(), args.out)
            return EXIT_OK
        if args.command == "run":
            wl = load(args.workload)
            if args.mode is not None:
                wl.mode = args.mode
            if args.verify_every < 0:
                raise WorkloadError("--verify-every must be non-negative")
            cfg = RunConfig(wl.mode, args.seed, args.verify_every, args.budget, args.copies, args.trace)
            try:
                mf = execute(wl, cfg)
            except InvariantViolation as err:
                dump = (args.out or Path("dyncolor")).with_suffix(".dump")
                dump.write_text(err.dump)
                print(f"dyncolor: invariant violation: {err} (state written to {dump})", file=sys.stderr)
                return EXIT_VIOLATION
            _emit(metrics.dumps(mf), args.out)
            return EXIT_OK
        summaries = [
            metrics.summarize(metrics.read(f), f.name, include_warmup=args.include_warmup)
            for f in args.files
        ]
        sys.stdout.write(metrics.format_report(summaries))
        return EXIT_OK
    except (WorkloadError, SchemaError, InvalidUpdate) as err:
        print(f"dyncolor: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
