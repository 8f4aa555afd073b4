"""Observation parsing, normalization, simple disjuncts and reach-set updates."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abmon.automata import Atom
from abmon.generators import no_early_b_assumption, worked_example_observation
from abmon.observations import (
    And,
    Clk,
    CompiledElement,
    Const,
    Letter,
    Loc,
    Multiplicity,
    Not,
    ObservationElement,
    ObservationError,
    Or,
    Query,
    SymbolicStateSet,
    apply_element,
    element,
    holds,
    normalize,
    parse_formula,
    parse_line,
    post,
    reach_set,
    resolve,
    to_simple_disjuncts,
)
from abmon.oracle import consistent_runs, enumerate_runs, random_tba
from abmon.zones import TIME, Zone, covered

from helpers import random_formula, random_precise_observation

NO_EARLY_B = no_early_b_assumption()


def state_in(s: SymbolicStateSet, loc: str, valuation, t) -> bool:
    return any(z.contains({**valuation, TIME: t}) for z in s.zones_at(loc))


def same_states(s1: SymbolicStateSet, s2: SymbolicStateSet) -> bool:
    """Mutual coverage, location by location."""
    locs = s1.locations() | s2.locations()
    return all(
        all(covered(z, s2.zones_at(q)) for z in s1.zones_at(q))
        and all(covered(z, s1.zones_at(q)) for z in s2.zones_at(q))
        for q in locs
    )


# -- parsing -----------------------------------------------------------------------


def test_parse_example_line():
    e = parse_line("@[6,7] =1 : a")
    assert e == ObservationElement(Letter("a"), Fraction(6), Fraction(7), Multiplicity("=", 1))


def test_parse_full_grammar():
    e = parse_line("@[1/2, 3] >=2 : !a & (loc:q1 | clk:x <= 5/2)  # note")
    assert e.lo == Fraction(1, 2) and e.mult == Multiplicity(">=", 2)
    assert e.formula == And((Not(Letter("a")), Or((Loc("q1"), Clk(Atom("x", "<=", Fraction(5, 2)))))))


def test_precedence():
    assert parse_formula("a | b & !c") == Or((Letter("a"), And((Letter("b"), Not(Letter("c"))))))
    assert parse_formula("true") == Const(True)


def test_queries_and_comments():
    assert parse_line("? 16") == Query(Fraction(16))
    assert parse_line("?5/2") == Query(Fraction(5, 2))
    assert parse_line("   ") is None
    assert parse_line("# only a comment") is None


@pytest.mark.parametrize(
    "line",
    ["@[3,1] =1 : a", "@[1,2] =1 :", "@[1,2] ~1 : a", "a", "@[1,2] =1 : a &", "? x", "@[1,2] =1 : clk:x ! 3"],
)
def test_malformed_lines(line):
    with pytest.raises(ObservationError):
        parse_line(line)


def test_roundtrip_text_form():
    rng = random.Random(0)
    for _ in range(100):
        f = random_formula(rng, NO_EARLY_B, depth=3)
        e = ObservationElement(f, Fraction(rng.randint(0, 4), 2), Fraction(5), Multiplicity("<=", 2))
        assert parse_line(str(e)) == e


def test_resolve_rejects_unknown_atoms():
    resolve(parse_formula("a & loc:q2 & clk:y > 1"), NO_EARLY_B)
    for text in ("c", "loc:q9", "clk:z < 1"):
        with pytest.raises(ObservationError):
            resolve(parse_formula(text), NO_EARLY_B)


# -- normalization -----------------------------------------------------------------


def test_normalize_examples():
    f = Letter("a")
    ge2 = ObservationElement(f, 1, 2, Multiplicity(">=", 2))
    assert normalize(ge2) == [
        ObservationElement(f, 1, 2, Multiplicity("=", 2)),
        ObservationElement(f, 1, 2, Multiplicity(">=", 0)),
    ]
    assert normalize(ObservationElement(f, 1, 2, Multiplicity("=", 0))) == []
    assert normalize(ObservationElement(f, 1, 2, Multiplicity("<=", 0))) == []
    ge0 = ObservationElement(f, 1, 2, Multiplicity(">=", 0))
    assert normalize(ge0) == [ge0]


# -- simple disjuncts -----------------------------------------------------------------


def test_disjunct_expansion():
    ds = to_simple_disjuncts(Letter("a"), ["a", "b"], ["q0", "q1", "q2"])
    assert ds == [("a", "q0", ()), ("a", "q1", ()), ("a", "q2", ())]
    ds = to_simple_disjuncts(parse_formula("!a"), ["a", "b"], ["q0"])
    assert {s for s, _, _ in ds} == {"b"}
    ds = to_simple_disjuncts(parse_formula("a & clk:x <= 1 & !loc:q2"), NO_EARLY_B.alphabet, NO_EARLY_B.locations)
    assert ds == [("a", "q0", (Atom("x", "<=", 1),)), ("a", "q1", (Atom("x", "<=", 1),))]


def test_contradictions_dropped():
    assert to_simple_disjuncts(parse_formula("clk:x < 1 & clk:x > 2"), ["a"], ["q"]) == []
    assert to_simple_disjuncts(parse_formula("false"), ["a"], ["q"]) == []


def test_disjuncts_agree_with_satisfaction():
    rng = random.Random(1)
    for _ in range(200):
        f = random_formula(rng, NO_EARLY_B, depth=3)
        ds = to_simple_disjuncts(f, NO_EARLY_B.alphabet, NO_EARLY_B.locations)
        for _ in range(10):
            s, q = rng.choice(NO_EARLY_B.alphabet), rng.choice(NO_EARLY_B.locations)
            v = {c: Fraction(rng.randint(0, 14), 2) for c in NO_EARLY_B.clocks}
            expect = holds(f, s, q, v)
            got = any(s == ds_s and q == ds_q and all(a.holds(v[a.clock]) for a in g) for ds_s, ds_q, g in ds)
            assert got == expect, (str(f), s, q, v)


# -- post and succ -------------------------------------------------------------------------


def test_post_example():
    (q, z), = post(("q0", Zone.zero(("x", "y", TIME))), "a", "q1", NO_EARLY_B)
    assert q == "q1"
    assert z.contains({"x": 3, "y": 0, TIME: 3})
    assert not z.contains({"x": 3, "y": 1, TIME: 3})
    assert not z.contains({"x": 3, "y": 0, TIME: 2})
    assert post(("q2", Zone.zero(("x", "y", TIME))), "a", "q1", NO_EARLY_B) == []


def test_post_matches_integer_delay_oracle():
    rng = random.Random(2)
    for _ in range(40):
        b = random_tba(rng, max_clocks=1)
        (c,) = b.clocks
        start = Zone.zero((c, TIME))
        for sigma in b.alphabet:
            for target in b.locations:
                succ = post(("l0", start), sigma, target, b)
                for d in range(0, 8):
                    for v in (0, d):
                        expect = any(
                            ed.symbol == sigma
                            and ed.target == target
                            and all(a.holds(Fraction(d)) for a in ed.guard)
                            and v == (0 if c in ed.resets else d)
                            for ed in b.edges_from["l0"]
                        )
                        got = any(z.contains({c: v, TIME: d}) for _, z in succ)
                        assert got == expect


def test_succ_examples():
    init = SymbolicStateSet.initial(NO_EARLY_B)
    ce = CompiledElement(element("a & loc:q1", 0, 0), NO_EARLY_B, NO_EARLY_B, 1, False)
    out = ce.succ(init)
    assert out.entries() == [("q1", Zone.zero(("x", "y", TIME)))]
    ce = CompiledElement(element("b & clk:x > 5", 0, 3), NO_EARLY_B, NO_EARLY_B, 1, False)
    assert ce.succ(init).is_empty()


# -- apply_element ----------------------------------------------------------------------------


def test_false_formula_star_is_identity():
    init = SymbolicStateSet.initial(NO_EARLY_B)
    out = apply_element(init, element("false", 0, 1, ">=", 0), NO_EARLY_B)
    assert same_states(out, init)


def test_forced_first_a():
    out = apply_element(SymbolicStateSet.initial(NO_EARLY_B), element("a", 0, 0), NO_EARLY_B)
    assert out.entries() == [("q1", Zone.zero(("x", "y", TIME)))]


def test_worked_example_witnesses():
    s = reach_set(NO_EARLY_B, worked_example_observation(final_silence=False))
    # r0 = (a,0)(a,6)(a,15) ends in q1 with y = 0
    assert state_in(s, "q1", {"x": 15, "y": 0}, 15)
    # r1 = (a,0)(a,6)(b,15)(a,16) ends in the trap with y = 10
    assert state_in(s, "q2", {"x": 16, "y": 10}, 16)
    assert s.locations() <= {"q1", "q2"}


def test_worked_example_non_witness():
    # four a's: the fourth must be mapped to the last =1 element as well
    words = {w for w, _ in consistent_runs(NO_EARLY_B, worked_example_observation(False), granularity=1, star_cap=1)}
    assert ((("a", 0), ("a", 6), ("a", 15))) in words
    assert (("a", 0), ("a", 6), ("b", 15), ("a", 16)) in words
    assert (("a", 0), ("a", 6), ("a", 15), ("a", 16)) not in words


def test_worked_example_full_observation():
    s = reach_set(NO_EARLY_B, worked_example_observation(final_silence=True))
    assert not s.is_empty()
    # b later than t2 + 10 returns to q0; early b falls into the trap
    assert state_in(s, "q0", {"x": 27, "y": 12}, 27)
    assert state_in(s, "q2", {"x": 20, "y": 5}, 20)
    assert s.locations() == {"q0", "q1", "q2"}


def test_reach_set_with_rational_scale():
    obs = [element("a", "1/2", "1/2")]
    s = reach_set(NO_EARLY_B.rescaled(2), obs, scale=2)
    assert state_in(s, "q1", {"x": 1, "y": 0}, 1)


def test_word_level_consistency_matches_oracle():
    """Grid run prefixes: end state in the reach-set iff some consistent word ends there."""
    rng = random.Random(3)
    compared = 0
    for _ in range(60):
        b = random_tba(rng, max_locations=3, max_clocks=2)
        obs = random_precise_observation(rng, b, rng.randint(1, 3), horizon=4, per_unit=1)
        s = reach_set(b, obs)
        exact = {(q, tuple(sorted(v.items())), w[-1][1] if w else Fraction(0)) for w, (q, v) in consistent_runs(b, obs)}
        for r in enumerate_runs(b, horizon=4, granularity=1, max_events=3):
            end = r.steps[-1][1] if r.steps else Fraction(0)
            key = (r.location, r.valuation, end)
            assert state_in(s, r.location, dict(r.valuation), end) == (key in exact)
            compared += 1
    assert compared > 1000


def test_interval_elements_are_sound():
    """Every sampled consistent word's end state lies in the reach-set."""
    rng = random.Random(4)
    for _ in range(60):
        b = random_tba(rng)
        obs = []
        cur = Fraction(0)
        for _ in range(rng.randint(1, 3)):
            lo = cur + rng.randint(0, 2)
            hi = lo + rng.randint(0, 2)
            kind = rng.choice(["=", "<=", ">="])
            obs.append(ObservationElement(random_formula(rng, b), lo, hi, Multiplicity(kind, rng.randint(0, 2))))
            cur = lo
        s = reach_set(b, obs)
        for w, (q, v) in consistent_runs(b, obs, star_cap=1):
            assert state_in(s, q, v, w[-1][1] if w else 0)


def _unroll(ce, s, k):
    acc, cur = s.copy(), s
    for _ in range(k):
        cur = ce.succ(cur)
        for q, z in cur:
            acc.add(q, z)
    return acc


def test_star_equals_union_of_unrollings():
    rng = random.Random(5)
    for _ in range(60):
        b = random_tba(rng)
        s = reach_set(b, random_precise_observation(rng, b, 1, horizon=3, per_unit=1))
        e = ObservationElement(random_formula(rng, b), Fraction(rng.randint(0, 3)), Fraction(5), Multiplicity(">=", 0))
        ce = CompiledElement(e, b, b, 1, False)
        star = ce.apply(s)
        k, prev = 0, _unroll(ce, s, 0)
        while True:
            k += 1
            nxt = _unroll(ce, s, k)
            if same_states(nxt, prev):
                break
            prev = nxt
            assert k < 50
        assert same_states(star, prev)
        # closed under one more step
        assert all(covered(z, star.zones_at(q)) for q, z in ce.succ(star))


def test_bounded_multiplicity_unrolls_exactly():
    rng = random.Random(6)
    for _ in range(60):
        b = random_tba(rng)
        f = random_formula(rng, b)
        s = SymbolicStateSet.initial(b)
        for n in (1, 2):
            le = ObservationElement(f, 0, 4, Multiplicity("<=", n))
            union = SymbolicStateSet(b.name, s.clocks)
            for k in range(n + 1):
                part = apply_element(s, ObservationElement(f, 0, 4, Multiplicity("=", k)), b) if k else s
                for q, z in part:
                    union.add(q, z)
            assert same_states(apply_element(s, le, b), union)


def test_normalization_equivalence():
    rng = random.Random(7)
    for _ in range(60):
        b = random_tba(rng)
        f = random_formula(rng, b)
        s = SymbolicStateSet.initial(b)
        e = ObservationElement(f, 0, 3, Multiplicity(">=", 2))
        direct = CompiledElement(ObservationElement(f, 0, 3, Multiplicity(">=", 0)), b, b, 1, False).apply(
            CompiledElement(ObservationElement(f, 0, 3, Multiplicity("=", 2)), b, b, 1, False).apply(s)
        )
        assert same_states(apply_element(s, e, b), direct)


def test_monotone_in_the_input_set():
    rng = random.Random(8)
    for _ in range(60):
        b = random_tba(rng)
        small = reach_set(b, random_precise_observation(rng, b, 1, horizon=3, per_unit=1))
        big = small.copy()
        for q in b.locations:
            big.add(q, Zone.universal(b.clocks + (TIME,)).restrict(TIME, "<=", 3))
        e = ObservationElement(random_formula(rng, b), 1, 4, Multiplicity(rng.choice(["=", "<=", ">="]), rng.randint(0, 2)))
        a, c = apply_element(small, e, b), apply_element(big, e, b)
        assert all(covered(z, c.zones_at(q)) for q, z in a)


@given(st.integers(0, 6), st.integers(0, 6), st.sampled_from(["=", "<=", ">="]), st.integers(0, 3))
@settings(max_examples=60)
def test_element_text_roundtrip(lo, width, kind, count):
    e = ObservationElement(Letter("a"), Fraction(lo, 2), Fraction(lo + width, 2), Multiplicity(kind, count))
    assert parse_line(str(e)) == e
