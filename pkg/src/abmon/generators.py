"""Benchmark instances: assumptions, property pairs and sample observations."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .automata import Atom, Edge, Tba, TbaError, save_tba
from .observations import Letter, ObservationElement, Multiplicity, letters_not, parse_formula


@dataclass(frozen=True)
class Instance:
    """An assumption with a property automaton and its complement."""

    assumption: Tba
    prop: Tba
    negprop: Tba

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "assumption": out / "assumption.json",
            "property": out / "property.json",
            "neg-property": out / "neg_property.json",
        }
        save_tba(self.assumption, paths["assumption"])
        save_tba(self.prop, paths["property"])
        save_tba(self.negprop, paths["neg-property"])
        return paths


def _g(clock: str, rel: str, const) -> Atom:
    return Atom(clock, rel, Fraction(const))


def _obs(formula, lo, hi, kind="=", count=1) -> ObservationElement:
    if isinstance(formula, str):
        formula = parse_formula(formula)
    return ObservationElement(formula, Fraction(lo), Fraction(hi), Multiplicity(kind, count))


# -- the small worked example -----------------------------------------------


def eventually_a_never_b(accept_positive: bool) -> Tba:
    """Deterministic automaton for "a within [0,10] and no b within [0,20]".

    With ``accept_positive`` the location ``phi`` is accepting (the
    property); otherwise ``nphi`` is (its negation).
    """
    x = "x"
    edges = [
        Edge("q0", "q1", "a", (_g(x, "<=", 10),)),
        Edge("q0", "nphi", "a", (_g(x, ">", 10),)),
        Edge("q0", "nphi", "b"),
        Edge("q1", "q1", "a", (_g(x, "<=", 20),)),
        Edge("q1", "phi", "a", (_g(x, ">", 20),)),
        Edge("q1", "phi", "b", (_g(x, ">", 20),)),
        Edge("q1", "nphi", "b", (_g(x, "<=", 20),)),
        Edge("phi", "phi", "a"),
        Edge("phi", "phi", "b"),
        Edge("nphi", "nphi", "a"),
        Edge("nphi", "nphi", "b"),
    ]
    return Tba(
        "prop" if accept_positive else "negprop",
        ("a", "b"),
        (x,),
        ("q0", "q1", "phi", "nphi"),
        {"q0"},
        {"phi"} if accept_positive else {"nphi"},
        edges,
    )


def no_early_b_assumption() -> Tba:
    """Assumption "no b during [0,1], and no b within 10 after an a"."""
    edges = [
        Edge("q0", "q1", "a", (), {"y"}),
        Edge("q1", "q1", "a", (), {"y"}),
        Edge("q0", "q0", "b", (_g("x", ">", 1),)),
        Edge("q1", "q0", "b", (_g("x", ">", 1), _g("y", ">", 10))),
        Edge("q0", "q2", "b", (_g("x", "<=", 1),)),
        Edge("q1", "q2", "b", (_g("x", "<=", 1),)),
        Edge("q1", "q2", "b", (_g("y", "<=", 10),)),
        Edge("q2", "q2", "a"),
        Edge("q2", "q2", "b"),
    ]
    return Tba(
        "assumption", ("a", "b"), ("x", "y"), ("q0", "q1", "q2"), {"q0"}, {"q0", "q1"}, edges
    )


def worked_example() -> Instance:
    return Instance(no_early_b_assumption(), eventually_a_never_b(True), eventually_a_never_b(False))


def worked_example_observation(final_silence: bool = True) -> list[ObservationElement]:
    """a at 0, around [6,7] and around [15,16]; b never observed."""
    obs = [
        _obs("a", 0, 0),
        _obs("!a", 0, 7, ">=", 0),
        _obs("a", 6, 7),
        _obs("!a", 6, 16, ">=", 0),
        _obs("a", 15, 16),
    ]
    if final_silence:
        obs.append(_obs("!a", 0, 30, ">=", 0))
    return obs


# -- task sequence ----------------------------------------------------------


def task_seq_assumption(k: int, lows: Sequence, highs: Sequence) -> Tba:
    """Chain a1 -> a2 -> ... -> ak with delays in [l_i, u_i], then idle ``$``."""
    if k < 2:
        raise TbaError("task sequence needs k >= 2")
    if len(lows) != k - 1 or len(highs) != k - 1:
        raise TbaError(f"need {k - 1} lower and upper delay bounds")
    for lo, hi in zip(lows, highs):
        if not 0 <= Fraction(lo) <= Fraction(hi):
            raise TbaError(f"bad delay interval [{lo},{hi}]")
    letters = [f"a{i}" for i in range(1, k + 1)]
    locs = [f"q{i}" for i in range(k + 1)]
    edges = [Edge("q0", "q1", "a1", (), {"x"})]
    for i in range(1, k):
        guard = (_g("x", ">=", lows[i - 1]), _g("x", "<=", highs[i - 1]))
        edges.append(Edge(f"q{i}", f"q{i + 1}", letters[i], guard, {"x"}))
    edges.append(Edge(f"q{k}", f"q{k}", "$"))
    return Tba("tasks", letters + ["$"], ("x",), locs, {"q0"}, {f"q{k}"}, edges)


def bounded_response(k: int, bound, accept_positive: bool) -> Tba:
    """Deterministic automaton for "every a1 is followed by ak within ``bound``"."""
    letters = [f"a{i}" for i in range(1, k + 1)] + ["$"]
    first, last = letters[0], letters[k - 1]
    y = "y"
    within, late = _g(y, "<=", bound), _g(y, ">", bound)
    edges = [Edge("idle", "pending", first, (), {y})]
    for s in letters:
        if s != first:
            edges.append(Edge("idle", "idle", s))
        if s == last:
            edges.append(Edge("pending", "idle", s, (within,)))
        else:
            edges.append(Edge("pending", "pending", s, (within,)))
        edges.append(Edge("pending", "bad", s, (late,)))
        edges.append(Edge("bad", "bad", s))
    return Tba(
        "prop" if accept_positive else "negprop",
        letters,
        (y,),
        ("idle", "pending", "bad"),
        {"idle"},
        {"idle", "pending"} if accept_positive else {"bad"},
        edges,
    )


def task_seq(k: int, lows: Sequence, highs: Sequence, bound) -> Instance:
    return Instance(
        task_seq_assumption(k, lows, highs),
        bounded_response(k, bound, True),
        bounded_response(k, bound, False),
    )


def sample_task_word(lows: Sequence[int], highs: Sequence[int], rng: random.Random) -> list[int]:
    """Event times t1 = 0, t_{i+1} = t_i + uniform integer delay in [l_i, u_i]."""
    times = [0]
    for lo, hi in zip(lows, highs):
        times.append(times[-1] + rng.randint(int(lo), int(hi)))
    return times


def task_observation(
    times: Sequence, hidden: Sequence[int] = ()
) -> list[ObservationElement]:
    """Precise observation of a1..ak at ``times``; events in ``hidden`` (1-based)
    become ``(!observable, [t_prev, t_i], >=0)`` elements."""
    k = len(times)
    hidden = set(hidden)
    observable = [f"a{i}" for i in range(1, k + 1) if i not in hidden]
    quiet = letters_not(observable) if observable else parse_formula("true")
    out = []
    for i, t in enumerate(times, start=1):
        if i in hidden:
            prev = times[i - 2] if i > 1 else 0
            out.append(ObservationElement(quiet, Fraction(prev), Fraction(t), Multiplicity(">=", 0)))
        else:
            out.append(_obs(Letter(f"a{i}"), t, t))
    return out


# -- conveyor belt ----------------------------------------------------------


def conveyor_assumption() -> Tba:
    """Nominal and faulty processing cycles; ``fault`` switches permanently."""
    edges = []
    for mode, (lo, hi) in (("n", (8, 10)), ("f", (7, 9))):
        q0, q1, q2 = (f"q{mode}{i}" for i in range(3))
        one = (_g("x", "==", 1),)
        edges += [
            Edge(q0, q1, "start", one, {"x"}),
            Edge(q1, q2, "stop", (_g("x", ">=", lo), _g("x", "<=", hi)), {"x"}),
            Edge(q2, q0, "move", one, {"x"}),
        ]
    for i in range(3):
        edges.append(Edge(f"qn{i}", f"qf{i}", "fault"))
    return Tba(
        "conveyor",
        ("start", "stop", "move", "fault"),
        ("x",),
        ("qn0", "qn1", "qn2", "qf0", "qf1", "qf2"),
        {"qn0"},
        {"qn0", "qf0"},
        edges,
    )


def never(letter: str, alphabet: Sequence[str], accept_positive: bool) -> Tba:
    """Deterministic automaton for "``letter`` never happens"."""
    edges = []
    for s in alphabet:
        edges.append(Edge("ok", "bad" if s == letter else "ok", s))
        edges.append(Edge("bad", "bad", s))
    return Tba(
        "prop" if accept_positive else "negprop",
        alphabet,
        (),
        ("ok", "bad"),
        {"ok"},
        {"ok"} if accept_positive else {"bad"},
        edges,
    )


def conveyor() -> Instance:
    a = conveyor_assumption()
    return Instance(a, never("fault", a.alphabet, True), never("fault", a.alphabet, False))


def conveyor_fault_observation() -> list[ObservationElement]:
    """Two uncertain cycles whose timing only a faulty belt explains."""
    return [
        _obs("start", 1, 1),
        _obs("fault", 1, 11, ">=", 0),
        _obs("stop", 8, 10),
        _obs("fault", 8, 11, ">=", 0),
        _obs("move", 9, 11),
        _obs("fault", 9, 12, ">=", 0),
        _obs("start", 10, 12),
        _obs("fault", 11, 22, ">=", 0),
        _obs("stop", 16, 18),
    ]


def conveyor_ambiguous_observation(stop_at=9) -> list[ObservationElement]:
    """One precise cycle whose duration fits both modes."""
    return [
        _obs("start", 1, 1),
        _obs("fault", 1, stop_at, ">=", 0),
        _obs("stop", stop_at, stop_at),
    ]


# -- jobshop ----------------------------------------------------------------

JOB_STATES = "IABD"


def jobshop_assumption(n: int, max_locations: int = 100_000) -> Tba:
    """Flattened network of n+1 jobs sharing resources A and B."""
    if n < 1:
        raise TbaError("jobshop needs n >= 1")
    jobs = range(n + 1)
    clocks = tuple(f"x{i}" for i in jobs)
    alphabet = ("tau",) + tuple(f"d{i}" for i in jobs) + ("$",)
    init = "I" * (n + 1)
    done = "D" * (n + 1)
    seen, order, edges = {init}, [init], []
    while order:
        s = order.pop()
        for i in jobs:
            succ = []
            if s[i] == "I":
                for r in "AB":
                    if r not in s:
                        succ.append(("tau", r, (_g(clocks[i], "<=", n),), {clocks[i]}))
            elif s[i] in "AB":
                need = n if i == 0 else 1
                succ.append((f"d{i}", "D", (_g(clocks[i], ">=", need),), set()))
            for sym, new, guard, resets in succ:
                t = s[:i] + new + s[i + 1 :]
                edges.append(Edge(s, t, sym, guard, resets))
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    if len(seen) > max_locations:
                        raise TbaError(f"jobshop n={n} exceeds {max_locations} locations")
    edges.append(Edge(done, done, "$"))
    rank = {c: i for i, c in enumerate(JOB_STATES)}
    locs = sorted(seen, key=lambda s: [rank[c] for c in s])
    return Tba("jobshop", alphabet, clocks, locs, {init}, {done}, edges)


def _done_by(n: int, alphabet: Sequence[str], accept_positive: bool) -> Tba:
    """Counts the ``d`` events with a never-reset clock; done means all n+1 by n."""
    z = "z"
    ontime, late = (_g(z, "<=", n),), (_g(z, ">", n),)
    ds = [s for s in alphabet if s.startswith("d")]
    others = [s for s in alphabet if s not in ds]
    edges = []
    if accept_positive:
        locs = [f"c{j}" for j in range(n + 2)]
        for j in range(n + 1):
            for s in ds:
                edges.append(Edge(f"c{j}", f"c{j + 1}", s, ontime))
            for s in others:
                edges.append(Edge(f"c{j}", f"c{j}", s, ontime))
        for s in alphabet:
            edges.append(Edge(f"c{n + 1}", f"c{n + 1}", s))
        accepting = {f"c{n + 1}"}
    else:
        locs = [f"c{j}" for j in range(n + 1)] + ["late"]
        for j in range(n + 1):
            if j < n:
                for s in ds:
                    edges.append(Edge(f"c{j}", f"c{j + 1}", s, ontime))
            for s in others:
                edges.append(Edge(f"c{j}", f"c{j}", s, ontime))
            for s in alphabet:
                edges.append(Edge(f"c{j}", "late", s, late))
        for s in alphabet:
            edges.append(Edge("late", "late", s))
        accepting = {"late"}
    return Tba(
        "prop" if accept_positive else "negprop", alphabet, (z,), locs, {"c0"}, accepting, edges
    )


def jobshop(n: int) -> Instance:
    a = jobshop_assumption(n)
    return Instance(a, _done_by(n, a.alphabet, True), _done_by(n, a.alphabet, False))


def jobshop_satisfying_observation(n: int) -> list[ObservationElement]:
    """d1..dn at times 1..n and d0 at n, each preceded by hidden scheduling."""
    obs = []
    for i in list(range(1, n + 1)) + [0]:
        obs.append(_obs("tau", 0, n, ">=", 0))
        t = i if i else n
        obs.append(_obs(f"d{i}", t, t))
    return obs
