"""Shared builders for randomized tests."""

from __future__ import annotations

import random
from fractions import Fraction

from abmon.automata import Atom, Tba
from abmon.observations import And, Clk, Letter, Loc, Multiplicity, Not, ObservationElement, Or


def random_formula(rng: random.Random, assumption: Tba, depth: int = 2, locs: bool = True):
    """Random formula over letters and, optionally, assumption locations; clocks always."""

    def atom():
        r = rng.random()
        if r < 0.6:
            return Letter(rng.choice(assumption.alphabet))
        if r < 0.8 and locs:
            return Loc(rng.choice(assumption.locations))
        if not assumption.clocks:
            return Letter(rng.choice(assumption.alphabet))
        c = rng.choice(assumption.clocks)
        return Clk(Atom(c, rng.choice(["<", "<=", "==", ">=", ">"]), rng.randint(0, 5)))

    def build(d):
        if d == 0 or rng.random() < 0.5:
            return atom()
        op = rng.random()
        if op < 0.3:
            return Not(build(d - 1))
        cls = And if op < 0.65 else Or
        return cls((build(d - 1), build(d - 1)))

    return build(depth)


def random_precise_observation(
    rng: random.Random,
    assumption: Tba,
    length: int,
    horizon: int = 10,
    locs: bool = True,
    per_unit: int = 2,
) -> list[ObservationElement]:
    """Point-interval, exactly-once elements at non-decreasing grid times."""
    times = sorted(Fraction(rng.randint(0, per_unit * horizon), per_unit) for _ in range(length))
    return [
        ObservationElement(random_formula(rng, assumption, locs=locs), t, t, Multiplicity("=", 1))
        for t in times
    ]


def random_element(rng: random.Random, assumption: Tba, start: Fraction, locs: bool = True):
    """An element whose interval starts at or after ``start``."""
    lo = start + Fraction(rng.randint(0, 4), 2)
    hi = lo + Fraction(rng.randint(0, 4), 2)
    kind = rng.choice(["=", "=", "<=", ">="])
    count = rng.randint(0, 2) if kind != "=" else rng.randint(0, 1) or 1
    return ObservationElement(
        random_formula(rng, assumption, locs=locs), lo, hi, Multiplicity(kind, count)
    )


def random_instance(rng: random.Random):
    """Random assumption with a random complementary safety pair."""
    from abmon.oracle import random_safety_pair, random_tba

    return random_tba(rng), *random_safety_pair(rng)


def random_walk(rng: random.Random, b: Tba, length: int, max_delay: int = 3):
    """A timed word that ``b`` can read, as far as a random walk gets."""
    from abmon.oracle import initial_states, step

    state, now, word = initial_states(b)[0], Fraction(0), []
    for _ in range(length):
        options = []
        for _ in range(6):
            d = Fraction(rng.randint(0, 2 * max_delay), 2)
            for s in b.alphabet:
                options += [(d, s, nxt) for nxt in step(b, state, s, d)]
        if not options:
            break
        d, s, state = rng.choice(options)
        now += d
        word.append((s, now))
    return word


def session_from_word(rng: random.Random, assumption: Tba, word, noise: float = 0.1):
    """Uncertain elements describing ``word``; a ``noise`` share is random."""
    out, cursor = [], Fraction(0)
    for s, t in word:
        if rng.random() < noise:
            e = random_element(rng, assumption, cursor, locs=False)
        else:
            lo = max(cursor, t - Fraction(rng.randint(0, 2), 2))
            hi = max(lo, t + Fraction(rng.randint(0, 2), 2))
            f = Letter(s) if rng.random() < 0.7 else Or((Letter(s), random_formula(rng, assumption, 1, False)))
            if rng.random() < 0.3:
                gap = Not(Letter(s)) if rng.random() < 0.5 else random_formula(rng, assumption, 1, False)
                out.append(ObservationElement(gap, cursor, lo, Multiplicity(rng.choice(["<=", ">="]), rng.randint(0, 1))))
            e = ObservationElement(f, lo, hi, Multiplicity("=", 1))
        out.append(e)
        cursor = e.lo
    return out
