"""Command-line front end: monitoring sessions, instance generation, benchmarks."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence, TextIO

from . import bench
from .automata import TbaError, format_rational, load_tba, save_tba, universal_tba
from .generators import (
    Instance,
    conveyor,
    conveyor_ambiguous_observation,
    conveyor_fault_observation,
    jobshop,
    jobshop_satisfying_observation,
    task_seq,
    worked_example,
    worked_example_observation,
)
from .monitor import Monitor, QueryRejected
from .observations import ObservationElement, ObservationError, Query, parse_line

EXIT_OK = 0
EXIT_INPUT = 3
EXIT_PARSE = 4
EXIT_REJECTED = 5

log = logging.getLogger("abmon")


@dataclass
class SessionConfig:
    assumption: Path
    prop: Path
    negprop: Path
    obs: Path | None = None
    per_element: bool = False
    latency_csv: Path | None = None


def run(config: SessionConfig, stdin: TextIO | None = None, stdout: TextIO | None = None) -> int:
    """Stream verdicts for one session; returns the process exit status."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    try:
        automata = [load_tba(p) for p in (config.assumption, config.prop, config.negprop)]
        monitor = Monitor(*automata)
    except (OSError, TbaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        source = open(config.obs) if config.obs is not None else stdin
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    latencies: list[tuple[int, float, str]] = []
    try:
        for lineno, line in enumerate(source, start=1):
            try:
                item = parse_line(line)
                if item is None:
                    continue
                t0 = time.perf_counter()
                if isinstance(item, Query):
                    v = monitor.verdict_at(item.time)
                    stdout.write(f"{v}\n")
                    continue
                monitor.observe(item)
                if config.per_element:
                    v = monitor.verdict_at(max(monitor.tau, item.hi))
                    latencies.append((lineno, time.perf_counter() - t0, v.value))
                    stdout.write(f"{lineno}\t{v}\n")
            except ObservationError as exc:
                print(f"line {lineno}: {exc}", file=sys.stderr)
                return EXIT_PARSE
            except QueryRejected as exc:
                print(f"line {lineno}: {exc}", file=sys.stderr)
                return EXIT_REJECTED
    finally:
        if source is not stdin:
            source.close()
        if config.latency_csv is not None and latencies:
            with open(config.latency_csv, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["line", "seconds", "verdict"])
                w.writerows((n, f"{s:.6f}", v) for n, s, v in latencies)
    return EXIT_OK


def write_observation(path: Path, elements: Sequence[ObservationElement], query=None) -> Path:
    lines = [str(e) for e in elements]
    if query is not None:
        lines.append(f"? {format_rational(Fraction(query))}")
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_instance(inst: Instance, out: Path) -> None:
    inst.write(out)
    save_tba(universal_tba(inst.assumption.alphabet), out / "universal.json")


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _expand(values: list[int], count: int, name: str) -> list[int]:
    if len(values) == 1:
        return values * count
    if len(values) != count:
        raise ValueError(f"--{name} needs 1 or {count} values, got {len(values)}")
    return values


def gen(args: argparse.Namespace) -> int:
    out = Path(args.out)
    if args.instance == "task-seq":
        if args.k < 2:
            print("error: --k must be at least 2", file=sys.stderr)
            return EXIT_INPUT
        try:
            lows = _expand(args.l, args.k - 1, "l")
            highs = _expand(args.u, args.k - 1, "u")
            if any(lo > hi or lo < 0 for lo, hi in zip(lows, highs)):
                raise ValueError("need 0 <= l_i <= u_i")
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        _write_instance(task_seq(args.k, lows, highs, args.bound), out)
    elif args.instance == "conveyor":
        _write_instance(conveyor(), out)
        write_observation(out / "fault.obs", conveyor_fault_observation(), 18)
        write_observation(out / "ambiguous.obs", conveyor_ambiguous_observation(), 9)
    elif args.instance == "jobshop":
        if args.n < 1:
            print("error: --n must be at least 1", file=sys.stderr)
            return EXIT_INPUT
        try:
            inst = jobshop(args.n)
        except TbaError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        _write_instance(inst, out)
        write_observation(out / "satisfying.obs", jobshop_satisfying_observation(args.n), args.n)
    elif args.instance == "example":
        _write_instance(worked_example(), out)
        write_observation(out / "observation.obs", worked_example_observation(False), 16)
        write_observation(out / "observation_full.obs", worked_example_observation(True), 30)
    print(f"wrote {args.instance} instance to {out}")
    return EXIT_OK


def report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if args.experiment == "task-seq":
        res = bench.task_seq_distribution(args.runs, args.k, args.l, args.u, args.bound, args.seed)
        written.append(bench.write_task_seq_table(res, out))
        if not args.no_plot:
            written.append(bench.plot_task_seq_table(res, out))
    elif args.experiment == "ramp":
        recs = bench.unobservable_ramp(args.k, range(args.hidden_from, args.hidden_to + 1), seed=args.seed)
        written.append(bench.write_ramp(recs, out))
        if not args.no_plot:
            written.append(bench.plot_ramp(recs, out))
    elif args.experiment == "jobshop":
        rows = bench.jobshop_scaling(args.max_n)
        written.append(bench.write_jobshop(rows, out))
        if not args.no_plot:
            written.append(bench.plot_jobshop(rows, out))
    for p in written:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abmon", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="monitor an observation stream")
    p.add_argument("--assumption", required=True, type=Path)
    p.add_argument("--property", required=True, type=Path)
    p.add_argument("--neg-property", required=True, type=Path)
    p.add_argument("--obs", type=Path, help="observation file (default: stdin)")
    p.add_argument("--per-element", action="store_true", help="print a verdict after every element")
    p.add_argument("--latency-csv", type=Path, help="per-element latency output (with --per-element)")

    g = sub.add_parser("gen", help="write benchmark instances")
    gsub = g.add_subparsers(dest="instance", required=True)
    t = gsub.add_parser("task-seq", help="task sequence with bounded response")
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--l", type=_csv_ints, required=True, help="lower delays, one or k-1 values")
    t.add_argument("--u", type=_csv_ints, required=True, help="upper delays, one or k-1 values")
    t.add_argument("--bound", type=int, required=True)
    for name in ("conveyor", "example"):
        gsub.add_parser(name)
    j = gsub.add_parser("jobshop")
    j.add_argument("--n", type=int, required=True, help="jobs minus one")
    for sp in gsub.choices.values():
        sp.add_argument("--out", required=True, type=Path)

    r = sub.add_parser("report", help="run an experiment, write CSV and PNG")
    rsub = r.add_subparsers(dest="experiment", required=True)
    rt = rsub.add_parser("task-seq", help="verdict distribution over random words")
    rt.add_argument("--runs", type=int, default=1000)
    rt.add_argument("--k", type=int, default=10)
    rt.add_argument("--l", type=int, default=50)
    rt.add_argument("--u", type=int, default=100)
    rt.add_argument("--bound", type=int, default=675)
    rr = rsub.add_parser("ramp", help="reach-set size over a stretch of hidden events")
    rr.add_argument("--k", type=int, default=100)
    rr.add_argument("--hidden-from", type=int, default=21)
    rr.add_argument("--hidden-to", type=int, default=40)
    rj = rsub.add_parser("jobshop", help="jobshop scaling")
    rj.add_argument("--max-n", type=int, default=4)
    for sp in rsub.choices.values():
        sp.add_argument("--out", required=True, type=Path)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--no-plot", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "run":
        cfg = SessionConfig(
            args.assumption, args.property, args.neg_property, args.obs,
            args.per_element, args.latency_csv,
        )
        return run(cfg)
    if args.command == "gen":
        return gen(args)
    return report(args)


if __name__ == "__main__":
    sys.exit(main())
