"""Benchmark experiments producing CSV rows and optional PNG figures."""

from __future__ import annotations

import csv
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .automata import universal_tba
from .generators import (
    jobshop,
    jobshop_satisfying_observation,
    sample_task_word,
    task_observation,
    task_seq,
)
from .monitor import Monitor, Verdict

# -- task-sequence verdict distribution ---------------------------------------


@dataclass
class Distribution:
    """Per observation index: new ⊤, new ⊥, and runs still at ?."""

    k: int
    new_sat: list[int] = field(default_factory=list)
    new_violated: list[int] = field(default_factory=list)
    unknown: list[int] = field(default_factory=list)

    def __post_init__(self):
        for lst in (self.new_sat, self.new_violated, self.unknown):
            lst.extend([0] * self.k)

    def definitive_before(self, index: int) -> int:
        """Runs that became definitive after some a_i with i < ``index``."""
        return sum(self.new_sat[: index - 1]) + sum(self.new_violated[: index - 1])


@dataclass
class TaskSeqResult:
    with_assumption: Distribution
    without_assumption: Distribution
    trajectories: list[tuple[list[int], list[Verdict], list[Verdict]]]


def task_seq_distribution(
    runs: int = 1000,
    k: int = 10,
    low: int = 50,
    high: int = 100,
    bound: int = 675,
    seed: int = 0,
) -> TaskSeqResult:
    """Monitor random in-assumption words, querying right after each event."""
    lows, highs = [low] * (k - 1), [high] * (k - 1)
    inst = task_seq(k, lows, highs, bound)
    with_a = Monitor(inst.assumption, inst.prop, inst.negprop)
    without_a = Monitor(universal_tba(inst.assumption.alphabet), inst.prop, inst.negprop)
    rng = random.Random(seed)
    dist_with, dist_without = Distribution(k), Distribution(k)
    trajectories = []
    for _ in range(runs):
        times = sample_task_word(lows, highs, rng)
        obs = task_observation(times)
        per = []
        for mon, dist in ((with_a, dist_with), (without_a, dist_without)):
            mon.reset()
            verdicts = []
            settled = False
            for i, (e, t) in enumerate(zip(obs, times)):
                mon.observe(e)
                v = mon.verdict_at(t)
                verdicts.append(v)
                if not settled and v in (Verdict.SAT, Verdict.VIOLATED):
                    settled = True
                    (dist.new_sat if v is Verdict.SAT else dist.new_violated)[i] += 1
                if not settled:
                    dist.unknown[i] += 1
            per.append(verdicts)
        trajectories.append((times, per[0], per[1]))
    return TaskSeqResult(dist_with, dist_without, trajectories)


def write_task_seq_table(result: TaskSeqResult, out_dir, first_row: int = 5) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "task_seq_verdicts.csv"
    a, n = result.with_assumption, result.without_assumption
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["observation", "noassume_sat", "noassume_violated", "noassume_unknown",
             "assume_sat", "assume_violated", "assume_unknown"]
        )
        for i in range(first_row - 1, a.k):
            w.writerow(
                [f"a{i + 1}", n.new_sat[i], n.new_violated[i], n.unknown[i],
                 a.new_sat[i], a.new_violated[i], a.unknown[i]]
            )
    return path


def plot_task_seq_table(result: TaskSeqResult, out_dir, first_row: int = 5) -> Path:
    plt = _pyplot()
    a, n = result.with_assumption, result.without_assumption
    idx = list(range(first_row - 1, a.k))
    labels = [f"a{i + 1}" for i in idx]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, dist, title in ((axes[0], n, "no assumption"), (axes[1], a, "with assumption")):
        xs = range(len(idx))
        ax.bar([x - 0.25 for x in xs], [dist.new_sat[i] for i in idx], 0.25, label="new SAT")
        ax.bar(list(xs), [dist.new_violated[i] for i in idx], 0.25, label="new VIOLATED")
        ax.bar([x + 0.25 for x in xs], [dist.unknown[i] for i in idx], 0.25, label="UNKNOWN")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels)
        ax.set_title(title)
        ax.set_xlabel("observation")
    axes[0].set_ylabel("runs")
    axes[1].legend()
    fig.tight_layout()
    path = Path(out_dir) / "task_seq_verdicts.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


# -- unobservable stretch -----------------------------------------------------------


@dataclass
class StepRecord:
    index: int
    observable: bool
    symbolic_states: int
    seconds: float


def unobservable_ramp(
    k: int = 100,
    hidden: Sequence[int] = tuple(range(21, 41)),
    low: int = 50,
    high: int = 100,
    bound: int | None = None,
    seed: int = 0,
) -> list[StepRecord]:
    """Reach-set size and update latency per element of one task word."""
    lows, highs = [low] * (k - 1), [high] * (k - 1)
    if bound is None:
        bound = (k - 1) * (low + high) // 2
    inst = task_seq(k, lows, highs, bound)
    mon = Monitor(inst.assumption, inst.prop, inst.negprop)
    times = sample_task_word(lows, highs, random.Random(seed))
    hidden = set(hidden)
    records = []
    for i, e in enumerate(task_observation(times, hidden), start=1):
        t0 = time.perf_counter()
        mon.observe(e)
        mon.verdict_at(max(mon.tau, e.hi))
        dt = time.perf_counter() - t0
        records.append(StepRecord(i, i not in hidden, sum(mon.sizes().values()), dt))
    return records


def write_ramp(records: Sequence[StepRecord], out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "unobservable_ramp.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "observable", "symbolic_states", "seconds"])
        for r in records:
            w.writerow([r.index, int(r.observable), r.symbolic_states, f"{r.seconds:.6f}"])
    return path


def plot_ramp(records: Sequence[StepRecord], out_dir) -> Path:
    plt = _pyplot()
    fig, ax1 = plt.subplots(figsize=(8, 4))
    xs = [r.index for r in records]
    ax1.plot(xs, [r.symbolic_states for r in records], color="tab:blue")
    ax1.set_xlabel("observation index")
    ax1.set_ylabel("symbolic states", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(xs, [r.seconds * 1e3 for r in records], color="tab:red", alpha=0.6)
    ax2.set_ylabel("update + query time (ms)", color="tab:red")
    fig.tight_layout()
    path = Path(out_dir) / "unobservable_ramp.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


# -- jobshop scaling ------------------------------------------------------------


@dataclass
class JobshopRow:
    jobs: int
    locations: int
    setup_seconds: float
    max_response_seconds: float
    max_symbolic_states: int
    verdict: str


def jobshop_scaling(max_n: int = 4) -> list[JobshopRow]:
    rows = []
    for n in range(1, max_n + 1):
        t0 = time.perf_counter()
        inst = jobshop(n)
        mon = Monitor(inst.assumption, inst.prop, inst.negprop)
        setup = time.perf_counter() - t0
        worst, states, v = 0.0, 0, Verdict.UNKNOWN
        for e in jobshop_satisfying_observation(n):
            t1 = time.perf_counter()
            mon.observe(e)
            v = mon.verdict_at(max(mon.tau, e.hi))
            worst = max(worst, time.perf_counter() - t1)
            states = max(states, mon.sizes()["assumption"] + mon.sizes()["prop"])
        rows.append(JobshopRow(n + 1, len(inst.assumption.locations), setup, worst, states, v.value))
    return rows


def write_jobshop(rows: Sequence[JobshopRow], out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "jobshop_scaling.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["jobs", "locations", "setup_s", "max_response_s", "max_symbolic_states", "verdict"])
        for r in rows:
            w.writerow([r.jobs, r.locations, f"{r.setup_seconds:.4f}",
                        f"{r.max_response_seconds:.6f}", r.max_symbolic_states, r.verdict])
    return path


def plot_jobshop(rows: Sequence[JobshopRow], out_dir) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy([r.jobs for r in rows], [r.max_response_seconds * 1e3 for r in rows], "o-",
                label="max response (ms)")
    ax.semilogy([r.jobs for r in rows], [r.setup_seconds * 1e3 for r in rows], "s--",
                label="setup (ms)")
    ax.set_xlabel("jobs")
    ax.legend()
    fig.tight_layout()
    path = Path(out_dir) / "jobshop_scaling.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt
