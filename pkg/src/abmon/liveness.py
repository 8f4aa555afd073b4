"""States with a nonempty (accepting, time-divergent) future."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .automata import Edge, Tba, strongly_non_zeno
from .zones import LE_ZERO, Zone, covered

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NonEmptyTable:
    """Per-location zone cover of NonEmpty(B) over the automaton clocks."""

    automaton: str
    clocks: tuple[str, ...]
    zones: Mapping[str, tuple[Zone, ...]]

    def __getitem__(self, loc: str) -> tuple[Zone, ...]:
        return self.zones.get(loc, ())

    def contains(self, loc: str, valuation) -> bool:
        return any(z.contains(valuation) for z in self[loc])

    def locations(self) -> list[str]:
        return [q for q, zs in self.zones.items() if zs]

    def rescaled(self, factor: int) -> "NonEmptyTable":
        if factor == 1:
            return self
        return NonEmptyTable(
            self.automaton,
            self.clocks,
            {q: tuple(z.scale(factor) for z in zs) for q, zs in self.zones.items()},
        )

    def dump(self) -> str:
        lines = []
        for q, zs in self.zones.items():
            for z in zs:
                lines.append(f"{q}\t{z}")
        return "\n".join(lines)


def _add(fed: list[Zone], z: Zone) -> bool:
    """Insert with subsumption; False if ``z`` was already covered by one zone."""
    for w in fed:
        if w.includes(z):
            return False
    fed[:] = [w for w in fed if not z.includes(w)]
    fed.append(z)
    return True


def _pre(edge: Edge, target: Zone) -> Zone:
    """Valuations at ``edge.source`` that can delay, take ``edge`` and land in ``target``."""
    z = target
    for c in edge.resets:
        z = z.constrain(z.index(c), 0, LE_ZERO)
        if z.is_empty():
            return z
    z = z.free(edge.resets)
    for a in edge.guard:
        z = _constrain_atom(z, a)
        if z.is_empty():
            return z
    return z.down()


def _constrain_atom(z: Zone, atom) -> Zone:
    c = int(atom.const)
    if atom.const != c:
        raise ValueError(f"non-integer constant {atom}; scale the automaton first")
    return z.restrict(atom.clock, atom.rel, c)


def _pre_plus(b: Tba, edges_to: dict[str, list[Edge]], seed: dict[str, list[Zone]]):
    """Least set of states reaching ``seed`` in one or more discrete steps."""
    result: dict[str, list[Zone]] = {q: [] for q in b.locations}
    work = deque((q, z, False) for q, zs in seed.items() for z in zs)
    while work:
        q, z, stored = work.popleft()
        if stored and not any(w is z for w in result[q]):
            continue  # subsumed since it was queued
        for e in edges_to[q]:
            p = _pre(e, z)
            if p.is_empty():
                continue
            if _add(result[e.source], p):
                work.append((e.source, p, True))
    return result


def compute_nonempty(b: Tba) -> NonEmptyTable:
    """Zone cover of the states from which an accepting non-Zeno run exists.

    Works backwards on the strongly non-Zeno version of ``b`` with the
    nested fixed point ``X = Pre+(F ∩ X)``; each iterate is a union of
    regions so the iteration terminates without extrapolation.
    """
    bz = strongly_non_zeno(b)
    edges_to: dict[str, list[Edge]] = {q: [] for q in bz.locations}
    for e in bz.edges:
        edges_to[e.target].append(e)
    top = Zone.universal(bz.clocks)
    x = {q: [top] for q in bz.locations}
    rounds = 0
    while True:
        rounds += 1
        seed = {q: x[q] for q in bz.accepting}
        y = _pre_plus(bz, edges_to, seed)
        # iterates only shrink, and the next one depends on F ∩ X alone
        stable = all(covered(z, y[q]) for q in bz.accepting for z in x[q])
        x = y
        if stable:
            break
    log.debug("nonempty(%s): %d outer rounds", b.name, rounds)
    table: dict[str, list[Zone]] = {q: [] for q in b.locations}
    for q, zs in x.items():
        base = bz.origin[q][0]
        for z in zs:
            _add(table[base], z.project(b.clocks))
    return NonEmptyTable(b.name, tuple(b.clocks), {q: tuple(zs) for q, zs in table.items()})


def intersects_nonempty(states: Iterable[tuple[str, Zone]], table: NonEmptyTable) -> bool:
    """True iff some symbolic state overlaps NonEmpty at its location."""
    for q, z in states:
        targets = table[q]
        if not targets:
            continue
        zp = z.project(table.clocks)
        if any(zp.intersects(w) for w in targets):
            return True
    return False
