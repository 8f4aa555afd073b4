"""Brute-force reference semantics for cross-checking the zone engine.

Nothing here touches zones or the observation operators: runs are
enumerated concretely with exact rationals and liveness is decided on a
classic region graph.  Only the automaton data model is shared.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .automata import Atom, Edge, Tba, guard_holds

Valuation = Mapping[str, Fraction]
State = tuple[str, dict]  # (location, valuation)


class OracleLimit(RuntimeError):
    """The instance is too large for exhaustive enumeration."""


# -- concrete runs ----------------------------------------------------------


def delay(val: Valuation, d) -> dict:
    return {c: v + d for c, v in val.items()}


def fire(val: Valuation, e: Edge) -> dict:
    return {c: (Fraction(0) if c in e.resets else v) for c, v in val.items()}


def initial_states(b: Tba) -> list[State]:
    zero = {c: Fraction(0) for c in b.clocks}
    return [(q, dict(zero)) for q in sorted(b.initial)]


def step(b: Tba, state: State, letter: str, d) -> list[State]:
    """Successors after delaying ``d`` and reading ``letter``."""
    q, val = state
    v = delay(val, d)
    return [
        (e.target, fire(v, e))
        for e in b.edges_from[q]
        if e.symbol == letter and guard_holds(e.guard, v)
    ]


def runs_over(b: Tba, word: Sequence[tuple[str, Fraction]]) -> list[State]:
    """End states of all runs over a finite timed word."""
    states = initial_states(b)
    now = Fraction(0)
    for letter, t in word:
        t = Fraction(t)
        if t < now:
            return []
        states = [s2 for s in states for s2 in step(b, s, letter, t - now)]
        now = t
    return _dedup(states)


def _dedup(states: Iterable[State]) -> list[State]:
    seen, out = set(), []
    for q, v in states:
        key = (q, tuple(sorted(v.items())))
        if key not in seen:
            seen.add(key)
            out.append((q, v))
    return out


@dataclass(frozen=True)
class RunPrefix:
    """Alternating locations and timed transitions, with the final valuation."""

    steps: tuple[tuple[str, Fraction, str], ...]  # (letter, time, target location)
    location: str
    valuation: tuple[tuple[str, Fraction], ...]

    @property
    def word(self) -> tuple[tuple[str, Fraction], ...]:
        return tuple((s, t) for s, t, _ in self.steps)


def enumerate_runs(
    b: Tba,
    horizon,
    granularity=Fraction(1, 2),
    max_events: int = 3,
    cap: int = 1_000_000,
) -> set[RunPrefix]:
    """All run prefixes with timestamps on the grid up to ``horizon``."""
    horizon, granularity = Fraction(horizon), Fraction(granularity)
    grid = [granularity * i for i in range(int(horizon / granularity) + 1)]
    out: set[RunPrefix] = set()

    def key(val):
        return tuple(sorted(val.items()))

    def rec(q, val, now, steps):
        out.add(RunPrefix(tuple(steps), q, key(val)))
        if len(out) > cap:
            raise OracleLimit(f"more than {cap} run prefixes")
        if len(steps) == max_events:
            return
        for t in grid:
            if t < now:
                continue
            v = delay(val, t - now)
            for e in b.edges_from[q]:
                if guard_holds(e.guard, v):
                    rec(e.target, fire(v, e), t, steps + [(e.symbol, t, e.target)])

    for q, val in initial_states(b):
        rec(q, val, Fraction(0), [])
    return out


def accepts_prefix(b: Tba, word) -> bool:
    """Some run of ``b`` reads the whole finite word."""
    return bool(runs_over(b, word))


# -- regions ----------------------------------------------------------------

INF = -1  # integer part marker for "above the maximal constant"


@dataclass(frozen=True)
class Region:
    """Integer parts plus the ordering of fractional parts.

    ``ints[i]`` is ``INF`` when clock ``i`` exceeds its maximal constant.
    ``zero`` holds the bounded clocks with zero fractional part and
    ``classes`` the others, grouped by equal fractional part, increasing.
    """

    ints: tuple[int, ...]
    zero: frozenset
    classes: tuple[frozenset, ...]


def region_of(values: Sequence[Fraction], bounds: Sequence[int]) -> Region:
    ints, zero, fr = [], set(), {}
    for i, (v, k) in enumerate(zip(values, bounds)):
        v = Fraction(v)
        if v > k:
            ints.append(INF)
            continue
        n = math.floor(v)
        ints.append(n)
        f = v - n
        if f == 0:
            zero.add(i)
        else:
            fr.setdefault(f, set()).add(i)
    classes = tuple(frozenset(fr[f]) for f in sorted(fr))
    return Region(tuple(ints), frozenset(zero), classes)


def time_successor(r: Region, bounds: Sequence[int]) -> Region:
    ints = list(r.ints)
    if r.zero:
        moving = set()
        for i in r.zero:
            if ints[i] == bounds[i]:
                ints[i] = INF
            else:
                moving.add(i)
        classes = ((frozenset(moving),) if moving else ()) + r.classes
        return Region(tuple(ints), frozenset(), classes)
    if r.classes:
        top = r.classes[-1]
        for i in top:
            ints[i] += 1
        return Region(tuple(ints), top, r.classes[:-1])
    return r


def region_satisfies(r: Region, i: int, rel: str, k: int) -> bool:
    n = r.ints[i]
    if n == INF:
        return rel in (">", ">=")
    if i in r.zero:
        return {"<": n < k, "<=": n <= k, "==": n == k, ">=": n >= k, ">": n > k}[rel]
    return {"<": n < k, "<=": n < k, "==": False, ">=": n >= k, ">": n >= k}[rel]


def region_reset(r: Region, idx: Iterable[int]) -> Region:
    idx = set(idx)
    if not idx:
        return r
    ints = tuple(0 if i in idx else n for i, n in enumerate(r.ints))
    classes = tuple(c - idx for c in r.classes)
    return Region(ints, r.zero | idx, tuple(c for c in classes if c))


# -- Büchi emptiness on the region graph -------------------------------------


class RegionOracle:
    """Accepting, time-divergent runs of synchronized automata.

    A run is accepting when every component visits its accepting set
    infinitely often.  Divergence is enforced with an extra clock ``w``:
    the search cycles through phases (visit each accepting set, take a
    discrete step, let one time unit pass) and a lasso must contain a
    completed round.
    """

    def __init__(self, automata: Sequence[Tba], node_cap: int = 2_000_000):
        self.automata = tuple(automata)
        self.clock_ids = [(ai, c) for ai, b in enumerate(self.automata) for c in b.clocks]
        self.index = {cid: i for i, cid in enumerate(self.clock_ids)}
        self.w = len(self.clock_ids)
        self.bounds = [self.automata[ai].max_constants[c] for ai, c in self.clock_ids] + [1]
        self.m = len(self.automata)
        self.node_cap = node_cap
        self.succ: dict[tuple, list[tuple]] = {}
        self.good: dict[tuple, bool] = {}
        self._letters = sorted({s for b in self.automata for s in b.alphabet})

    def _norm(self, locs, phase):
        while phase < self.m and locs[phase] in self.automata[phase].accepting:
            phase += 1
        return phase

    def _accepting(self, node) -> bool:
        locs, r, phase = node
        return phase == self.m + 1 and region_satisfies(r, self.w, ">=", 1)

    def start_node(self, states: Sequence[State]) -> tuple:
        locs = tuple(q for q, _ in states)
        values = [states[ai][1][c] for ai, c in self.clock_ids] + [Fraction(0)]
        return (locs, region_of(values, self.bounds), self._norm(locs, 0))

    def _successors(self, node) -> list[tuple]:
        locs, r, phase = node
        if self._accepting(node):
            phase = self._norm(locs, 0)
        out = []
        out.append((locs, time_successor(r, self.bounds), phase))
        for letter in self._letters:
            choices = []
            for ai, b in enumerate(self.automata):
                opts = [
                    e
                    for e in b.edges_from[locs[ai]]
                    if e.symbol == letter
                    and all(
                        region_satisfies(r, self.index[(ai, a.clock)], a.rel, int(a.const))
                        for a in e.guard
                    )
                ]
                if not opts:
                    break
                choices.append(opts)
            else:
                for combo in _cartesian(choices):
                    resets = [self.index[(ai, c)] for ai, e in enumerate(combo) for c in e.resets]
                    nlocs = tuple(e.target for e in combo)
                    if phase == self.m:
                        out.append((nlocs, region_reset(r, resets + [self.w]), self.m + 1))
                    elif phase == self.m + 1:
                        out.append((nlocs, region_reset(r, resets), phase))
                    else:
                        out.append((nlocs, region_reset(r, resets), self._norm(nlocs, phase)))
        return out

    def _explore(self, starts: Iterable[tuple]) -> list[tuple]:
        fresh = []
        todo = [s for s in starts if s not in self.succ]
        while todo:
            n = todo.pop()
            if n in self.succ:
                continue
            ss = self._successors(n)
            self.succ[n] = ss
            fresh.append(n)
            if len(self.succ) > self.node_cap:
                raise OracleLimit(f"region graph exceeds {self.node_cap} nodes")
            todo.extend(s for s in ss if s not in self.succ)
        return fresh

    def _classify(self, fresh: list[tuple]) -> None:
        if not fresh:
            return
        g = nx.DiGraph()
        for n in fresh:
            g.add_node(n)
            for s in self.succ[n]:
                g.add_edge(n, s)
        seeds = set()
        for comp in nx.strongly_connected_components(g):
            n0 = next(iter(comp))
            nontrivial = len(comp) > 1 or g.has_edge(n0, n0)
            if nontrivial and any(self._accepting(n) for n in comp):
                seeds |= comp
        # previously classified nodes keep their status and are closed under successors
        seeds |= {n for n in g if self.good.get(n)}
        good = set(seeds)
        rev = g.reverse(copy=False)
        stack = list(seeds)
        while stack:
            n = stack.pop()
            for p in rev.successors(n):
                if p not in good:
                    good.add(p)
                    stack.append(p)
        for n in fresh:
            self.good[n] = n in good

    def nonempty(self, states: Sequence[State]) -> bool:
        """Is there an accepting non-Zeno run from the joint concrete state?"""
        node = self.start_node(states)
        if node not in self.good:
            self._classify(self._explore([node]))
        return self.good[node]


def _cartesian(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for rest in _cartesian(lists[1:]):
            yield (head,) + rest


def region_nonempty(b: Tba, state: State) -> bool:
    return RegionOracle([b]).nonempty([state])


# -- brute-force verdicts ------------------------------------------------------


def _sat(f, letter: str, loc: str, val: Valuation) -> bool:
    """Formula satisfaction, walking the AST by node kind."""
    kind = type(f).__name__
    if kind == "Const":
        return f.value
    if kind == "Letter":
        return f.name == letter
    if kind == "Loc":
        return f.name == loc
    if kind == "Clk":
        return f.atom.holds(val[f.atom.clock])
    if kind == "Not":
        return not _sat(f.arg, letter, loc, val)
    if kind == "And":
        return all(_sat(a, letter, loc, val) for a in f.args)
    if kind == "Or":
        return any(_sat(a, letter, loc, val) for a in f.args)
    raise TypeError(f"unknown formula node {kind}")


def consistent_runs(
    assumption: Tba,
    observation: Sequence,
    granularity=Fraction(1, 2),
    star_cap: int = 2,
    cap: int = 200_000,
) -> list[tuple[tuple, State]]:
    """``(word, end state)`` pairs of assumption runs witnessing the observation.

    Exact for point intervals with ``=e`` or ``<=e`` multiplicities; other
    intervals are sampled on the grid and ``>=e`` is cut off at
    ``e + star_cap`` events, which under-approximates.
    """
    granularity = Fraction(granularity)
    frontier = [((), q, v, Fraction(0)) for q, v in initial_states(assumption)]
    for el in observation:
        lo, hi = Fraction(el.lo), Fraction(el.hi)
        kind, count = el.mult.kind, el.mult.count
        counts = {
            "=": [count],
            "<=": list(range(count + 1)),
            ">=": list(range(count, count + star_cap + 1)),
        }[kind]
        nxt = []
        for word, q, v, now in frontier:
            for n in counts:
                nxt.extend(_events(assumption, el.formula, word, q, v, now, lo, hi, n, granularity))
                if len(nxt) > cap:
                    raise OracleLimit("too many consistent runs")
        frontier = _dedup_runs(nxt)
    return [(w, (q, v)) for w, q, v, _ in frontier]


def _events(b, formula, word, q, v, now, lo, hi, n, granularity):
    if n == 0:
        yield (word, q, v, now)
        return
    start = max(lo, now)
    if start > hi:
        return
    times = [start] if start == hi else _grid(start, hi, granularity)
    for t in times:
        v1 = delay(v, t - now)
        for e in b.edges_from[q]:
            if not guard_holds(e.guard, v1):
                continue
            v2 = fire(v1, e)
            if _sat(formula, e.symbol, e.target, v2):
                yield from _events(
                    b, formula, word + ((e.symbol, t),), e.target, v2, t, lo, hi, n - 1, granularity
                )


def _grid(lo: Fraction, hi: Fraction, g: Fraction) -> list[Fraction]:
    first = math.ceil(lo / g)
    pts = [g * i for i in range(first, math.floor(hi / g) + 1)]
    if lo not in pts:
        pts.insert(0, lo)
    if hi not in pts:
        pts.append(hi)
    return pts


def _dedup_runs(items):
    seen, out = set(), []
    for w, q, v, now in items:
        key = (w, q, tuple(sorted(v.items())))
        if key not in seen:
            seen.add(key)
            out.append((w, q, v, now))
    return out


def _word_end(word) -> Fraction:
    return word[-1][1] if word else Fraction(0)


def observation_duration(assumption: Tba, observation: Sequence, **kw) -> Fraction:
    runs = consistent_runs(assumption, observation, **kw)
    return max((_word_end(w) for w, _ in runs), default=Fraction(0))


class BruteVerdict:
    """Verdicts from explicit runs plus region-graph liveness."""

    def __init__(self, assumption: Tba, prop: Tba, negprop: Tba):
        self.assumption, self.prop, self.negprop = assumption, prop, negprop
        self.alone = RegionOracle([assumption])
        self.with_neg = RegionOracle([negprop, assumption])
        self.with_pos = RegionOracle([prop, assumption])

    def verdict(self, observation: Sequence, t, **kw) -> str:
        t = Fraction(t)
        runs = consistent_runs(self.assumption, observation, **kw)
        tau = max((_word_end(w) for w, _ in runs), default=Fraction(0))
        if t < tau or t < 0:
            raise ValueError(f"verdict undefined before {tau}")

        def shifted(word, st):
            return (st[0], delay(st[1], t - _word_end(word)))

        live = [(w, st) for w, st in runs if self.alone.nonempty([shifted(w, st)])]
        if not live:
            return "OUT_OF_MODEL"
        if not self._extends(self.negprop, self.with_neg, live, shifted):
            return "SAT"
        if not self._extends(self.prop, self.with_pos, live, shifted):
            return "VIOLATED"
        return "UNKNOWN"

    @staticmethod
    def _extends(b, oracle, live, shifted) -> bool:
        cache: dict = {}
        for w, st in live:
            if w not in cache:
                cache[w] = runs_over(b, w)
            for pst in cache[w]:
                if oracle.nonempty([shifted(w, pst), shifted(w, st)]):
                    return True
        return False


def brute_verdict(assumption: Tba, prop: Tba, negprop: Tba, observation, t, **kw) -> str:
    return BruteVerdict(assumption, prop, negprop).verdict(observation, t, **kw)


# -- random instances ----------------------------------------------------------


def random_guard(rng: random.Random, clocks: Sequence[str], max_const: int) -> tuple:
    atoms = []
    for c in clocks:
        if rng.random() < 0.4:
            atoms.append(Atom(c, rng.choice(["<", "<=", "==", ">=", ">"]), rng.randint(0, max_const)))
    return tuple(atoms)


def random_tba(
    rng: random.Random,
    alphabet: Sequence[str] = ("a", "b"),
    max_locations: int = 3,
    max_clocks: int = 2,
    max_const: int = 5,
    name: str = "rand",
    clock_prefix: str = "x",
) -> Tba:
    n = rng.randint(1, max_locations)
    locs = [f"l{i}" for i in range(n)]
    clocks = [f"{clock_prefix}{i}" for i in range(rng.randint(1, max_clocks))]
    edges = []
    for q in locs:
        for s in alphabet:
            for _ in range(rng.choice([0, 1, 1, 2])):
                resets = {c for c in clocks if rng.random() < 0.4}
                edges.append(Edge(q, rng.choice(locs), s, random_guard(rng, clocks, max_const), resets))
    accepting = {q for q in locs if rng.random() < 0.6} or {rng.choice(locs)}
    return Tba(name, tuple(alphabet), tuple(clocks), tuple(locs), {"l0"}, accepting, edges)


def random_safety_pair(
    rng: random.Random,
    alphabet: Sequence[str] = ("a", "b"),
    max_locations: int = 2,
    max_const: int = 5,
    clock: str = "p",
) -> tuple[Tba, Tba]:
    """A deterministic complete safety automaton and its exact complement.

    Both share the same transition structure with a ``bad`` sink; the
    property accepts every other location, the negation only ``bad``.
    """
    good = [f"g{i}" for i in range(rng.randint(1, max_locations))]
    targets = good + ["bad"]
    edges = []
    for q in good:
        for s in alphabet:
            k = rng.randint(0, max_const)
            lo_rel, hi_rel = rng.choice([("<=", ">"), ("<", ">=")])
            for rel in (lo_rel, hi_rel):
                tgt = rng.choice(targets)
                resets = {clock} if rng.random() < 0.4 else set()
                edges.append(Edge(q, tgt, s, (Atom(clock, rel, k),), resets))
    for s in alphabet:
        edges.append(Edge("bad", "bad", s))
    locs = tuple(good + ["bad"])

    def build(name, acc):
        return Tba(name, tuple(alphabet), (clock,), locs, {"g0"}, acc, edges)

    return build("prop", set(good)), build("negprop", {"bad"})
