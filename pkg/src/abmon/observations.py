"""Uncertain observations and the reach-set operators over them.

An observation element ``(phi, [lo, hi], m)`` says that ``m`` events, each
satisfying ``phi``, happened during ``[lo, hi]``.  Formulas mix alphabet
letters, assumption locations and assumption clock constraints.

Reach-set zones range over the automaton clocks plus a never-reset global
clock ``time`` that records the instant of the last event.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .automata import Atom, Edge, Tba, TbaError, format_rational, parse_rational
from .zones import TIME, Zone

# -- formulas ---------------------------------------------------------------


class ObservationError(ValueError):
    """Malformed observation text or unresolved formula atom."""


@dataclass(frozen=True)
class Const:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Letter:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Loc:
    name: str

    def __str__(self) -> str:
        return f"loc:{self.name}"


@dataclass(frozen=True)
class Clk:
    atom: Atom

    def __str__(self) -> str:
        a = self.atom
        return f"clk:{a.clock}{a.rel}{format_rational(a.const)}"


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self) -> str:
        return f"!{_wrap(self.arg)}"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]

    def __str__(self) -> str:
        return " & ".join(_wrap(a) for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]

    def __str__(self) -> str:
        return " | ".join(_wrap(a) for a in self.args)


Formula = Union[Const, Letter, Loc, Clk, Not, And, Or]


def _wrap(f: Formula) -> str:
    return f"({f})" if isinstance(f, (And, Or)) else str(f)


def letters_not(letters: Iterable[str]) -> Formula:
    """``!(l1 | l2 | ...)``; handy for unobservable events."""
    return Not(Or(tuple(Letter(s) for s in letters)))


_TOKEN = re.compile(
    r"\s*(?:(?P<op>[!&|()])"
    r"|(?P<clk>clk:\s*(?P<cname>[A-Za-z_$][A-Za-z0-9_$.']*)\s*"
    r"(?P<rel><=|>=|==|=|<|>)\s*(?P<const>\d+(?:/\d+)?))"
    r"|(?P<loc>loc:\s*(?P<lname>[A-Za-z0-9_$.']+))"
    r"|(?P<id>[A-Za-z_$][A-Za-z0-9_$.']*))"
)


def _tokenize(text: str) -> list[tuple[str, object]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ObservationError(f"unexpected input at column {pos + 1}: {text[pos:]!r}")
        pos = m.end()
        if m.group("op"):
            out.append(("op", m.group("op")))
        elif m.group("clk"):
            atom = Atom(m.group("cname"), m.group("rel"), parse_rational(m.group("const")))
            out.append(("atom", Clk(atom)))
        elif m.group("loc"):
            out.append(("atom", Loc(m.group("lname"))))
        else:
            name = m.group("id")
            node = Const(name == "true") if name in ("true", "false") else Letter(name)
            out.append(("atom", node))
    return out


def parse_formula(text: str) -> Formula:
    """Parse ``!``, ``&``, ``|`` (in decreasing precedence) over atoms."""
    toks = _tokenize(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, None)

    def expect(op):
        nonlocal pos
        if peek() != ("op", op):
            raise ObservationError(f"expected {op!r} in formula {text!r}")
        pos += 1

    def p_or():
        args = [p_and()]
        while peek() == ("op", "|"):
            expect("|")
            args.append(p_and())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def p_and():
        args = [p_not()]
        while peek() == ("op", "&"):
            expect("&")
            args.append(p_not())
        return args[0] if len(args) == 1 else And(tuple(args))

    def p_not():
        nonlocal pos
        kind, val = peek()
        if (kind, val) == ("op", "!"):
            pos += 1
            return Not(p_not())
        if (kind, val) == ("op", "("):
            pos += 1
            f = p_or()
            expect(")")
            return f
        if kind == "atom":
            pos += 1
            return val
        raise ObservationError(f"unexpected end of formula {text!r}")

    if not toks:
        raise ObservationError("empty formula")
    try:
        f = p_or()
    except TbaError as exc:
        raise ObservationError(str(exc)) from None
    if pos != len(toks):
        raise ObservationError(f"trailing input in formula {text!r}")
    return f


def atoms_of(f: Formula) -> Iterator[Formula]:
    if isinstance(f, Not):
        yield from atoms_of(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from atoms_of(a)
    else:
        yield f


def resolve(f: Formula, assumption: Tba) -> None:
    """Check every atom against the assumption's declarations."""
    for a in atoms_of(f):
        if isinstance(a, Letter) and a.name not in assumption.alphabet:
            raise ObservationError(f"unknown letter {a.name!r}")
        if isinstance(a, Loc) and a.name not in assumption.locations:
            raise ObservationError(f"unknown assumption location {a.name!r}")
        if isinstance(a, Clk) and a.atom.clock not in assumption.clocks:
            raise ObservationError(f"unknown assumption clock {a.atom.clock!r}")


def holds(f: Formula, letter: str, loc: str, valuation: Mapping[str, Fraction]) -> bool:
    """Direct satisfaction check ``letter, (loc, valuation) |= f``."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Letter):
        return f.name == letter
    if isinstance(f, Loc):
        return f.name == loc
    if isinstance(f, Clk):
        return f.atom.holds(valuation[f.atom.clock])
    if isinstance(f, Not):
        return not holds(f.arg, letter, loc, valuation)
    if isinstance(f, And):
        return all(holds(a, letter, loc, valuation) for a in f.args)
    return any(holds(a, letter, loc, valuation) for a in f.args)


# -- multiplicities and elements --------------------------------------------


@dataclass(frozen=True)
class Multiplicity:
    kind: str  # "=", "<=" or ">="
    count: int

    def __post_init__(self):
        if self.kind not in ("=", "<=", ">="):
            raise ObservationError(f"unknown multiplicity kind {self.kind!r}")
        if self.count < 0:
            raise ObservationError("multiplicity must be nonnegative")

    def __str__(self) -> str:
        return f"{self.kind}{self.count}"


@dataclass(frozen=True)
class ObservationElement:
    formula: Formula
    lo: Fraction
    hi: Fraction
    mult: Multiplicity

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if not 0 <= self.lo <= self.hi:
            raise ObservationError(f"bad interval [{self.lo},{self.hi}]")

    def rationals(self) -> list[Fraction]:
        """Every constant that must become an integer after scaling."""
        out = [self.lo, self.hi]
        out += [a.atom.const for a in atoms_of(self.formula) if isinstance(a, Clk)]
        return out

    def __str__(self) -> str:
        return (
            f"@[{format_rational(self.lo)},{format_rational(self.hi)}] "
            f"{self.mult} : {self.formula}"
        )


def element(formula: Formula | str, lo, hi, kind: str = "=", count: int = 1) -> ObservationElement:
    if isinstance(formula, str):
        formula = parse_formula(formula)
    return ObservationElement(
        formula, parse_rational(lo), parse_rational(hi), Multiplicity(kind, count)
    )


@dataclass(frozen=True)
class Query:
    time: Fraction


_LINE = re.compile(
    r"^@\s*\[\s*(?P<lo>[^,\]]+?)\s*,\s*(?P<hi>[^\]]+?)\s*\]\s*"
    r"(?P<kind><=|>=|=)\s*(?P<count>\d+)\s*:\s*(?P<formula>.+)$"
)


def parse_line(line: str) -> ObservationElement | Query | None:
    """Parse one stream line; blank lines and ``#`` comments give ``None``."""
    s = line.split("#", 1)[0].strip()
    if not s:
        return None
    if s.startswith("?"):
        try:
            return Query(parse_rational(s[1:].strip()))
        except TbaError as exc:
            raise ObservationError(f"bad query time: {exc}") from None
    m = _LINE.match(s)
    if not m:
        raise ObservationError(f"expected '@[LO,HI] MULT : FORMULA' or '? T', got {s!r}")
    try:
        lo, hi = parse_rational(m.group("lo")), parse_rational(m.group("hi"))
    except TbaError as exc:
        raise ObservationError(str(exc)) from None
    return ObservationElement(
        parse_formula(m.group("formula")),
        lo,
        hi,
        Multiplicity(m.group("kind"), int(m.group("count"))),
    )


def normalize(e: ObservationElement) -> list[ObservationElement]:
    """Rewrite into multiplicities ``=e`` (e >= 1), ``<=e`` (e >= 1) or ``>=0``."""
    k, n = e.mult.kind, e.mult.count
    if n == 0 and k in ("=", "<="):
        return []
    if k == ">=" and n > 0:
        return [
            ObservationElement(e.formula, e.lo, e.hi, Multiplicity("=", n)),
            ObservationElement(e.formula, e.lo, e.hi, Multiplicity(">=", 0)),
        ]
    return [e]


# -- simple disjuncts -------------------------------------------------------


def _feasible(atoms: Sequence[Atom]) -> bool:
    lo: dict[str, tuple[Fraction, bool]] = {}
    hi: dict[str, tuple[Fraction, bool]] = {}
    for a in atoms:
        c = a.const
        if a.rel in (">", ">=", "=="):
            cand = (c, a.rel == ">")
            cur = lo.get(a.clock)
            if cur is None or cand[0] > cur[0] or (cand[0] == cur[0] and cand[1]):
                lo[a.clock] = cand
        if a.rel in ("<", "<=", "=="):
            cand = (c, a.rel == "<")
            cur = hi.get(a.clock)
            if cur is None or cand[0] < cur[0] or (cand[0] == cur[0] and cand[1]):
                hi[a.clock] = cand
    for c, (h, hs) in hi.items():
        lv, ls = lo.get(c, (Fraction(0), False))
        if lv > h or (lv == h and (hs or ls)):
            return False
    return True


def _dnf(f: Formula, letter: str, loc: str, neg: bool) -> list[tuple[Atom, ...]]:
    """Clock-only DNF of ``f`` (or its negation) once letter and location are fixed."""
    if isinstance(f, Const):
        return [()] if f.value != neg else []
    if isinstance(f, Letter):
        return [()] if (f.name == letter) != neg else []
    if isinstance(f, Loc):
        return [()] if (f.name == loc) != neg else []
    if isinstance(f, Clk):
        return [(b,) for b in f.atom.negate()] if neg else [(f.atom,)]
    if isinstance(f, Not):
        return _dnf(f.arg, letter, loc, not neg)
    conj = isinstance(f, And) != neg
    parts = [_dnf(a, letter, loc, neg) for a in f.args]
    if not conj:
        out: list[tuple[Atom, ...]] = []
        for p in parts:
            for c in p:
                if () == c:
                    return [()]
                if c not in out:
                    out.append(c)
        return out
    acc: list[tuple[Atom, ...]] = [()]
    for p in parts:
        acc = [a + b for a in acc for b in p if _feasible(a + b)]
        if not acc:
            return []
    return acc


def to_simple_disjuncts(
    f: Formula, alphabet: Iterable[str], locations: Iterable[str]
) -> list[tuple[str, str, tuple[Atom, ...]]]:
    """Equivalent disjunction of ``letter & loc & guard`` triples."""
    out = []
    locations = list(locations)
    for s in alphabet:
        for q in locations:
            for g in _dnf(f, s, q, False):
                out.append((s, q, g))
    return out


def compile_formula(
    f: Formula, assumption: Tba, scale: int = 1
) -> dict[tuple[str, str], list[tuple[Atom, ...]]]:
    """Disjuncts keyed by ``(letter, assumption location)``, constants scaled."""
    table: dict[tuple[str, str], list[tuple[Atom, ...]]] = {}
    for s, q, g in to_simple_disjuncts(f, assumption.alphabet, assumption.locations):
        table.setdefault((s, q), []).append(tuple(a.scaled(scale) for a in g))
    return table


# -- symbolic state sets ----------------------------------------------------


class SymbolicStateSet:
    """Subsumption-reduced set of ``(location, zone)`` pairs of one automaton."""

    def __init__(self, automaton: str, clocks: Sequence[str]):
        self.automaton = automaton
        self.clocks = tuple(clocks)
        self._by_loc: dict[str, list[Zone]] = {}

    @classmethod
    def initial(cls, b: Tba) -> "SymbolicStateSet":
        s = cls(b.name, zone_clocks(b))
        z0 = Zone.zero(s.clocks)
        for q in sorted(b.initial):
            s.add(q, z0)
        return s

    def add(self, loc: str, zone: Zone) -> bool:
        """Insert unless subsumed; drops entries the new zone subsumes."""
        if zone.is_empty():
            return False
        zs = self._by_loc.setdefault(loc, [])
        for w in zs:
            if w.includes(zone):
                return False
        zs[:] = [w for w in zs if not zone.includes(w)]
        zs.append(zone)
        return True

    def copy(self) -> "SymbolicStateSet":
        s = SymbolicStateSet(self.automaton, self.clocks)
        s._by_loc = {q: list(zs) for q, zs in self._by_loc.items()}
        return s

    def entries(self) -> list[tuple[str, Zone]]:
        return [(q, z) for q, zs in self._by_loc.items() for z in zs]

    def __iter__(self):
        return iter(self.entries())

    def __len__(self) -> int:
        return sum(len(zs) for zs in self._by_loc.values())

    def is_empty(self) -> bool:
        return len(self) == 0

    def locations(self) -> set[str]:
        return {q for q, zs in self._by_loc.items() if zs}

    def zones_at(self, loc: str) -> list[Zone]:
        return list(self._by_loc.get(loc, ()))

    def includes(self, other: "SymbolicStateSet") -> bool:
        """Entrywise subsumption: every zone of ``other`` is inside one of ours."""
        return all(any(w.includes(z) for w in self._by_loc.get(q, ())) for q, z in other)

    def map_zones(self, fn) -> "SymbolicStateSet":
        s = SymbolicStateSet(self.automaton, self.clocks)
        for q, z in self:
            s.add(q, fn(z))
        return s

    def at_time(self, t: int) -> "SymbolicStateSet":
        """Let time pass until the global clock reads exactly ``t``."""
        return self.map_zones(lambda z: z.up().restrict(TIME, "==", t))

    def __repr__(self) -> str:
        return f"SymbolicStateSet({self.automaton}, {len(self)} entries)"


def zone_clocks(b: Tba) -> tuple[str, ...]:
    return tuple(b.clocks) + (TIME,)


def assumption_location(b: Tba, loc: str, product_with_assumption: bool) -> str:
    return b.origin[loc][1] if product_with_assumption else loc


def post(state: tuple[str, Zone], sigma: str, target: str, b: Tba) -> list[tuple[str, Zone]]:
    """Take a ``sigma`` edge into ``target`` after some delay."""
    q, z = state
    up = z.up()
    out = []
    for e in b.edges_from[q]:
        if e.symbol != sigma or e.target != target:
            continue
        r = _fire(up, e)
        if not r.is_empty():
            out.append((e.target, r))
    return out


def _fire(up: Zone, e: Edge) -> Zone:
    r = up
    for a in e.guard:
        r = r.restrict(a.clock, a.rel, _int(a.const))
        if r.is_empty():
            return r
    return r.reset(e.resets)


def _int(c: Fraction) -> int:
    if c.denominator != 1:
        raise ValueError(f"non-integer constant {c}; scale first")
    return c.numerator


class CompiledElement:
    """An element specialized to one automaton and one time scale."""

    def __init__(
        self,
        e: ObservationElement,
        b: Tba,
        assumption: Tba,
        scale: int,
        product_with_assumption: bool,
    ):
        lo, hi = e.lo * scale, e.hi * scale
        self.element = e
        self.lo, self.hi = _int(lo), _int(hi)
        self.kind, self.count = e.mult.kind, e.mult.count
        self.table = compile_formula(e.formula, assumption, scale)
        self.b = b
        self.assumption_of = (
            {q: b.origin[q][1] for q in b.locations} if product_with_assumption else None
        )
        self._edge_guards: dict[Edge, list[tuple[Atom, ...]]] = {}
        for edge in b.edges:
            qa = self.assumption_of[edge.target] if self.assumption_of else edge.target
            gs = self.table.get((edge.symbol, qa))
            if gs:
                self._edge_guards[edge] = gs

    def succ(self, states: Iterable[tuple[str, Zone]]) -> SymbolicStateSet:
        """One event matching the formula, at a time inside the interval."""
        out = SymbolicStateSet(self.b.name, zone_clocks(self.b))
        for q, z in states:
            up = z.up().restrict(TIME, "<=", self.hi)
            if up.is_empty():
                continue
            for e in self.b.edges_from[q]:
                gs = self._edge_guards.get(e)
                if not gs:
                    continue
                r = _fire(up, e)
                if r.is_empty():
                    continue
                r = r.restrict(TIME, ">=", self.lo)
                if r.is_empty():
                    continue
                for g in gs:
                    rg = r
                    for a in g:
                        rg = rg.restrict(a.clock, a.rel, _int(a.const))
                        if rg.is_empty():
                            break
                    out.add(e.target, rg)
        return out

    def apply(self, s: SymbolicStateSet) -> SymbolicStateSet:
        if self.kind == "=":
            cur = s
            for _ in range(self.count):
                cur = self.succ(cur)
                if cur.is_empty():
                    break
            return cur
        if self.kind == "<=":
            acc = s.copy()
            cur = s
            for _ in range(self.count):
                cur = self.succ(cur)
                for q, z in cur:
                    acc.add(q, z)
            return acc
        if self.count != 0:
            raise ValueError("normalize elements before applying them")
        acc = s.copy()
        frontier = s.entries()
        while frontier:
            fresh = []
            for q, z in self.succ(frontier):
                if acc.add(q, z):
                    fresh.append((q, z))
            # entries added earlier in this round may since have been subsumed
            frontier = [(q, z) for q, z in fresh if z in acc._by_loc.get(q, ())]
        return acc


def apply_element(
    s: SymbolicStateSet,
    e: ObservationElement,
    b: Tba,
    assumption: Tba | None = None,
    scale: int = 1,
) -> SymbolicStateSet:
    """Advance a reach-set by one (possibly non-normal) element.

    ``b`` is either the assumption itself (``assumption`` omitted) or a
    product whose second component is ``assumption``.
    """
    is_product = assumption is not None and assumption is not b
    a = assumption if assumption is not None else b
    for part in normalize(e):
        s = CompiledElement(part, b, a, scale, is_product).apply(s)
    return s


def reach_set(
    b: Tba,
    elements: Iterable[ObservationElement],
    assumption: Tba | None = None,
    scale: int = 1,
) -> SymbolicStateSet:
    s = SymbolicStateSet.initial(b)
    for e in elements:
        s = apply_element(s, e, b, assumption, scale)
    return s
