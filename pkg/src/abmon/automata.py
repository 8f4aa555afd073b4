"""Timed Büchi automata: data model, JSON format, scaling and products."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from itertools import product as iproduct
from typing import Iterable, Mapping, Sequence

RELATIONS = ("<", "<=", "==", ">=", ">")
_REL_ALIASES = {"=": "==", "≤": "<=", "≥": ">="}


class TbaError(ValueError):
    """Raised for malformed or inconsistent automata."""


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"`` or an integer string (decimals are accepted too)."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    s = str(text).strip()
    if "/" in s:
        p, _, q = s.partition("/")
        try:
            num, den = int(p), int(q)
        except ValueError:
            raise TbaError(f"bad rational {text!r}") from None
        if den <= 0:
            raise TbaError(f"bad rational {text!r}: denominator must be positive")
        return Fraction(num, den)
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise TbaError(f"bad rational {text!r}") from None


def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Atom:
    """``clock rel const`` with ``const >= 0``."""

    clock: str
    rel: str
    const: Fraction

    def __post_init__(self):
        rel = _REL_ALIASES.get(self.rel, self.rel)
        if rel not in RELATIONS:
            raise TbaError(f"unknown relation {self.rel!r}")
        object.__setattr__(self, "rel", rel)
        object.__setattr__(self, "const", Fraction(self.const))
        if self.const < 0:
            raise TbaError(f"negative constant in {self.clock} {rel} {self.const}")

    def holds(self, value) -> bool:
        c = self.const
        return {
            "<": value < c,
            "<=": value <= c,
            "==": value == c,
            ">=": value >= c,
            ">": value > c,
        }[self.rel]

    def negate(self) -> list["Atom"]:
        """Atoms whose disjunction is the negation of this atom."""
        if self.rel == "==":
            return [Atom(self.clock, "<", self.const), Atom(self.clock, ">", self.const)]
        flip = {"<": ">=", "<=": ">", ">=": "<", ">": "<="}[self.rel]
        return [Atom(self.clock, flip, self.const)]

    def scaled(self, factor: int) -> "Atom":
        return Atom(self.clock, self.rel, self.const * factor)

    def __str__(self) -> str:
        return f"{self.clock}{self.rel}{format_rational(self.const)}"


Guard = tuple  # tuple[Atom, ...]; the empty tuple is ``true``


def guard_holds(guard: Iterable[Atom], valuation: Mapping[str, Fraction]) -> bool:
    return all(a.holds(valuation[a.clock]) for a in guard)


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    symbol: str
    guard: tuple[Atom, ...] = ()
    resets: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "guard", tuple(self.guard))
        object.__setattr__(self, "resets", frozenset(self.resets))


@dataclass(frozen=True)
class Tba:
    """A timed Büchi automaton.

    ``origin`` optionally records, for derived automata (products,
    non-Zeno copies), the tuple of component locations behind each
    location id.  ``scale`` is the common denominator already multiplied
    into every constant.
    """

    name: str
    alphabet: tuple[str, ...]
    clocks: tuple[str, ...]
    locations: tuple[str, ...]
    initial: frozenset[str]
    accepting: frozenset[str]
    edges: tuple[Edge, ...]
    scale: int = 1
    origin: Mapping[str, tuple] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for attr in ("alphabet", "clocks", "locations", "edges"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        self.validate()

    def validate(self) -> None:
        locs, clocks, sigma = set(self.locations), set(self.clocks), set(self.alphabet)
        if len(locs) != len(self.locations):
            raise TbaError(f"{self.name}: duplicate location ids")
        if len(clocks) != len(self.clocks):
            raise TbaError(f"{self.name}: duplicate clocks")
        if "0" in clocks or "time" in clocks:
            raise TbaError(f"{self.name}: clock names '0' and 'time' are reserved")
        for q in self.initial | self.accepting:
            if q not in locs:
                raise TbaError(f"{self.name}: undeclared location {q!r}")
        for e in self.edges:
            for q in (e.source, e.target):
                if q not in locs:
                    raise TbaError(f"{self.name}: undeclared location {q!r}")
            if e.symbol not in sigma:
                raise TbaError(f"{self.name}: undeclared symbol {e.symbol!r}")
            for c in e.resets:
                if c not in clocks:
                    raise TbaError(f"{self.name}: undeclared clock {c!r}")
            for a in e.guard:
                if a.clock not in clocks:
                    raise TbaError(f"{self.name}: undeclared clock {a.clock!r}")

    @cached_property
    def edges_from(self) -> dict[str, list[Edge]]:
        out: dict[str, list[Edge]] = {q: [] for q in self.locations}
        for e in self.edges:
            out[e.source].append(e)
        return out

    @cached_property
    def max_constants(self) -> dict[str, int]:
        """Largest constant each clock is compared against (0 if none)."""
        k = {c: 0 for c in self.clocks}
        for e in self.edges:
            for a in e.guard:
                k[a.clock] = max(k[a.clock], math.ceil(a.const))
        return k

    def constants(self) -> list[Fraction]:
        return [a.const for e in self.edges for a in e.guard]

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.constants())

    def rescaled(self, factor: int) -> "Tba":
        """Multiply every constant by the positive integer ``factor``."""
        if factor == 1:
            return self
        edges = [
            replace(e, guard=tuple(a.scaled(factor) for a in e.guard)) for e in self.edges
        ]
        return replace(self, edges=tuple(edges), scale=self.scale * factor)

    def __str__(self) -> str:
        return (
            f"Tba({self.name}: {len(self.locations)} locations, "
            f"{len(self.clocks)} clocks, {len(self.edges)} edges)"
        )


# -- JSON file format -------------------------------------------------------


def parse_tba(document: str | Mapping) -> Tba:
    """Parse the JSON automaton format (a string or an already-loaded dict)."""
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TbaError(
                f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None
    else:
        data = document
    if not isinstance(data, dict):
        raise TbaError("automaton document must be a JSON object")
    try:
        name = str(data.get("name", "tba"))
        alphabet = [str(s) for s in data["alphabet"]]
        clocks = [str(c) for c in data.get("clocks", [])]
        locs = data["locations"]
        edges_in = data.get("edges", [])
    except KeyError as exc:
        raise TbaError(f"missing field {exc.args[0]!r}") from None
    locations = [str(q["id"]) for q in locs]
    initial = [str(q["id"]) for q in locs if q.get("initial", False)]
    accepting = [str(q["id"]) for q in locs if q.get("accepting", False)]
    edges = []
    for n, e in enumerate(edges_in):
        try:
            guard = tuple(
                Atom(str(g["clock"]), str(g["rel"]), parse_rational(g["const"]))
                for g in e.get("guard", [])
            )
            edges.append(
                Edge(
                    str(e["from"]),
                    str(e["to"]),
                    str(e["symbol"]),
                    guard,
                    frozenset(str(c) for c in e.get("resets", [])),
                )
            )
        except KeyError as exc:
            raise TbaError(f"edge {n}: missing field {exc.args[0]!r}") from None
        except TbaError as exc:
            raise TbaError(f"edge {n}: {exc}") from None
    return Tba(name, alphabet, clocks, locations, initial, accepting, edges)


def load_tba(path) -> Tba:
    with open(path, encoding="utf-8") as fh:
        return parse_tba(fh.read())


def tba_to_dict(tba: Tba) -> dict:
    return {
        "name": tba.name,
        "alphabet": list(tba.alphabet),
        "clocks": list(tba.clocks),
        "locations": [
            {"id": q, "initial": q in tba.initial, "accepting": q in tba.accepting}
            for q in tba.locations
        ],
        "edges": [
            {
                "from": e.source,
                "to": e.target,
                "symbol": e.symbol,
                "guard": [
                    {"clock": a.clock, "rel": a.rel, "const": format_rational(a.const)}
                    for a in e.guard
                ],
                "resets": sorted(e.resets),
            }
            for e in tba.edges
        ],
    }


def serialize_tba(tba: Tba) -> str:
    return json.dumps(tba_to_dict(tba), indent=1)


def save_tba(tba: Tba, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_tba(tba) + "\n")


# -- scaling ----------------------------------------------------------------


def common_scale(values: Iterable[Fraction]) -> int:
    s = 1
    for v in values:
        s = math.lcm(s, Fraction(v).denominator)
    return s


def scale_constants(
    automata: Sequence[Tba], extra_rationals: Iterable[Fraction] = ()
) -> tuple[list[Tba], int]:
    """Multiply all constants by the lcm of every denominator involved."""
    extra = [Fraction(x) for x in extra_rationals]
    scale = common_scale([c for t in automata for c in t.constants()] + extra)
    return [t.rescaled(scale) for t in automata], scale


# -- constructions ----------------------------------------------------------


def universal_tba(alphabet: Iterable[str], name: str = "universal") -> Tba:
    """Single accepting location with an unguarded self-loop per letter."""
    alphabet = tuple(alphabet)
    return Tba(
        name,
        alphabet,
        (),
        ("u",),
        {"u"},
        {"u"},
        [Edge("u", "u", s) for s in alphabet],
    )


def product(b1: Tba, b2: Tba, prune: bool = True) -> Tba:
    """Büchi intersection of two automata.

    Locations are ``(q1, q2, flag)`` triples (rendered as ``q1|q2|flag``);
    the flag moves 0 -> 1 when leaving an accepting location of ``b1`` and
    1 -> 0 when leaving an accepting location of ``b2``.  Colliding clock
    names of ``b1`` are prefixed with ``b1.name``.  With ``prune`` only
    locations reachable in the untimed graph are kept.
    """
    if set(b1.alphabet) != set(b2.alphabet):
        raise TbaError(
            f"alphabet mismatch between {b1.name!r} and {b2.name!r}: "
            f"{sorted(set(b1.alphabet) ^ set(b2.alphabet))}"
        )
    rename = {c: (f"{b1.name}.{c}" if c in b2.clocks else c) for c in b1.clocks}
    clocks1 = [rename[c] for c in b1.clocks]
    if set(clocks1) & set(b2.clocks):
        raise TbaError("cannot separate clock namespaces")

    def lid(q1, q2, f):
        return f"{q1}|{q2}|{f}"

    by_symbol2: dict[tuple[str, str], list[Edge]] = {}
    for e in b2.edges:
        by_symbol2.setdefault((e.source, e.symbol), []).append(e)

    def successors(q1, q2, f):
        nf = f
        if f == 0 and q1 in b1.accepting:
            nf = 1
        elif f == 1 and q2 in b2.accepting:
            nf = 0
        for e1 in b1.edges_from[q1]:
            for e2 in by_symbol2.get((q2, e1.symbol), ()):
                guard = tuple(Atom(rename[a.clock], a.rel, a.const) for a in e1.guard)
                yield Edge(
                    lid(q1, q2, f),
                    lid(e1.target, e2.target, nf),
                    e1.symbol,
                    guard + e2.guard,
                    frozenset(rename[c] for c in e1.resets) | e2.resets,
                ), (e1.target, e2.target, nf)

    init = [(q1, q2, 0) for q1 in sorted(b1.initial) for q2 in sorted(b2.initial)]
    if prune:
        seen = set(init)
        order = list(init)
        edges = []
        i = 0
        while i < len(order):
            st = order[i]
            i += 1
            for edge, nxt in successors(*st):
                edges.append(edge)
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(nxt)
        states = order
    else:
        states = list(iproduct(b1.locations, b2.locations, (0, 1)))
        edges = [edge for st in states for edge, _ in successors(*st)]
    origin = {lid(*st): st for st in states}
    return Tba(
        f"{b1.name}*{b2.name}",
        b2.alphabet,
        clocks1 + list(b2.clocks),
        [lid(*st) for st in states],
        [lid(*st) for st in init],
        [lid(*st) for st in states if st[2] == 1 and st[1] in b2.accepting],
        edges,
        scale=b2.scale,
        origin=origin,
    )


def fresh_clock(tba: Tba, base: str = "z") -> str:
    name = base
    i = 0
    while name in tba.clocks or name in ("0", "time"):
        i += 1
        name = f"{base}{i}"
    return name


def strongly_non_zeno(b: Tba) -> Tba:
    """Equivalent automaton on which every accepting cycle lasts >= 1 time unit.

    Each accepting location ``q`` gets a non-accepting twin that keeps the
    name ``q`` and an accepting copy ``q^``; entering ``q^`` requires the
    fresh clock to be at least 1 (one scaled unit) and resets it.
    """
    z = fresh_clock(b, "_z")
    acc_name = {q: f"{q}^" for q in b.accepting}
    taken = set(b.locations)
    for q, n in acc_name.items():
        while n in taken:
            n += "^"
        acc_name[q] = n
        taken.add(n)
    locations = list(b.locations) + [acc_name[q] for q in b.locations if q in b.accepting]
    edges = []
    for e in b.edges:
        sources = [e.source] + ([acc_name[e.source]] if e.source in b.accepting else [])
        for s in sources:
            edges.append(Edge(s, e.target, e.symbol, e.guard, e.resets))
            if e.target in b.accepting:
                edges.append(
                    Edge(
                        s,
                        acc_name[e.target],
                        e.symbol,
                        e.guard + (Atom(z, ">=", Fraction(1)),),
                        e.resets | {z},
                    )
                )
    origin = {q: (q, 0) for q in b.locations}
    origin.update({n: (q, 1) for q, n in acc_name.items()})
    return Tba(
        f"{b.name}~nz",
        b.alphabet,
        list(b.clocks) + [z],
        locations,
        b.initial,
        acc_name.values(),
        edges,
        scale=b.scale,
        origin=origin,
    )
