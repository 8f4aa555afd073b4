"""The brute-force reference itself: run enumeration, regions, verdicts."""

from __future__ import annotations

import ast
import random
from fractions import Fraction
from pathlib import Path

import pytest

import abmon.oracle as oracle_mod
from abmon.automata import Atom, Edge, Tba, universal_tba
from abmon.generators import eventually_a_never_b, no_early_b_assumption
from abmon.observations import element
from abmon.oracle import (
    INF,
    OracleLimit,
    RegionOracle,
    brute_verdict,
    enumerate_runs,
    random_safety_pair,
    region_nonempty,
    region_of,
    runs_over,
    time_successor,
)

NO_EARLY_B = no_early_b_assumption()


def test_oracle_imports_no_symbolic_code():
    tree = ast.parse(Path(oracle_mod.__file__).read_text())
    imported = {
        node.module for node in ast.walk(tree) if isinstance(node, ast.ImportFrom) and node.module
    }
    assert not {m for m in imported if m.endswith(("zones", "observations", "liveness", "monitor"))}


def test_first_a_at_every_grid_point():
    runs = enumerate_runs(NO_EARLY_B, horizon=2, max_events=1)
    firsts = {r.steps[0][1] for r in runs if r.steps and r.steps[0][0] == "a"}
    assert firsts == {Fraction(i, 2) for i in range(5)}
    assert all(r.location == "q1" for r in runs if r.steps and r.steps[0][0] == "a")


def test_unsatisfiable_initial_guards():
    b = Tba("dead", ("a",), ("x",), ("q", "r"), {"q"}, {"r"}, [Edge("q", "r", "a", (Atom("x", "<", 0),))])
    runs = enumerate_runs(b, horizon=3)
    assert [r.steps for r in runs] == [()]


def test_chain_hand_count():
    # a with x <= 1 then b with x >= 1, grid {0, 1/2, ..., 2}:
    # empty prefix 1; a at 0, 1/2, 1 gives 3; each then has b at 1, 3/2, 2 gives 9
    b = Tba(
        "chain",
        ("a", "b"),
        ("x",),
        ("l0", "l1", "l2"),
        {"l0"},
        {"l2"},
        [Edge("l0", "l1", "a", (Atom("x", "<=", 1),)), Edge("l1", "l2", "b", (Atom("x", ">=", 1),))],
    )
    assert len(enumerate_runs(b, horizon=2)) == 13


def test_enumeration_cap():
    with pytest.raises(OracleLimit):
        enumerate_runs(universal_tba(["a", "b"]), horizon=5, max_events=4, cap=100)


def test_runs_over_reject_decreasing_times():
    assert runs_over(NO_EARLY_B, [("a", Fraction(2)), ("a", Fraction(1))]) == []


def test_region_basics():
    r = region_of([Fraction(1, 2), Fraction(3)], [2, 2])
    assert r.ints == (0, INF) and r.classes == (frozenset({0}),) and not r.zero
    nxt = time_successor(r, [2, 2])
    assert nxt.ints == (1, INF) and nxt.zero == {0}
    assert time_successor(region_of([2, 5], [2, 2]), [2, 2]).ints == (INF, INF)


def test_region_nonempty_examples():
    zero = {"x": Fraction(0), "y": Fraction(0)}
    assert not region_nonempty(NO_EARLY_B, ("q2", zero))
    for v in (0, Fraction(1, 2), 7):
        assert region_nonempty(NO_EARLY_B, ("q0", {"x": Fraction(v), "y": Fraction(v)}))


def test_joint_oracle_on_property_and_assumption():
    o = RegionOracle([eventually_a_never_b(True), NO_EARLY_B])
    zero = {"x": Fraction(0)}
    assert o.nonempty([("q0", zero), ("q0", {"x": Fraction(0), "y": Fraction(0)})])
    assert not o.nonempty([("nphi", zero), ("q0", {"x": Fraction(0), "y": Fraction(0)})])


def test_brute_verdict_examples():
    u = universal_tba(["a", "b"])
    empty_lang = Tba("none", ("a", "b"), (), ("q",), {"q"}, (), [Edge("q", "q", "a"), Edge("q", "q", "b")])
    assert brute_verdict(u, u, empty_lang, [], 0) == "SAT"
    assert brute_verdict(u, eventually_a_never_b(True), eventually_a_never_b(False), [element("b", 5, 5)], 5) == "VIOLATED"


def test_brute_verdict_rejects_early_query():
    with pytest.raises(ValueError):
        brute_verdict(NO_EARLY_B, eventually_a_never_b(True), eventually_a_never_b(False), [element("a", 3, 3)], 2)


def test_random_safety_pair_is_complementary():
    rng = random.Random(0)
    for _ in range(50):
        p, n = random_safety_pair(rng)
        # deterministic and complete: every word has exactly one run, ending in good or bad
        for _ in range(10):
            times = sorted(rng.randint(0, 6) for _ in range(rng.randint(0, 4)))
            w = [(rng.choice("ab"), Fraction(t)) for t in times]
            ends_p, ends_n = runs_over(p, w), runs_over(n, w)
            assert len(ends_p) == len(ends_n) == 1
