"""Four-valued online monitor driven by three reach-sets."""

from __future__ import annotations

import logging
import math
from enum import Enum
from fractions import Fraction
from typing import Iterable

from .automata import Tba, TbaError, common_scale, product
from .zones import TIME
from .liveness import NonEmptyTable, compute_nonempty, intersects_nonempty
from .observations import (
    CompiledElement,
    ObservationElement,
    SymbolicStateSet,
    normalize,
    resolve,
)

log = logging.getLogger(__name__)


class Verdict(Enum):
    SAT = "SAT"
    VIOLATED = "VIOLATED"
    UNKNOWN = "UNKNOWN"
    OUT_OF_MODEL = "OUT_OF_MODEL"

    @property
    def symbol(self) -> str:
        return {"SAT": "⊤", "VIOLATED": "⊥", "UNKNOWN": "?", "OUT_OF_MODEL": "×"}[self.value]

    @property
    def definitive(self) -> bool:
        return self is not Verdict.UNKNOWN

    def __str__(self) -> str:
        return self.value


def specificity_leq(v1: Verdict, v2: Verdict) -> bool:
    """``v1`` is at most as specific as ``v2``: ? below ⊤ and ⊥, both below ×."""
    return v1 is v2 or v1 is Verdict.UNKNOWN or v2 is Verdict.OUT_OF_MODEL


class QueryRejected(ValueError):
    """Query time lies before the end of an already observed interval."""


class ImpartialityViolation(AssertionError):
    """A definitive verdict was followed by an incompatible one."""


class Monitor:
    """Online verdicts for ``prop`` under ``assumption``.

    ``negprop`` must accept exactly the complement of ``prop``; this is the
    caller's contract and is not checked.  Observation elements are fed with
    :meth:`observe`, verdicts requested with :meth:`verdict_at`.  Queries do
    not alter the stored reach-sets.
    """

    def __init__(
        self, assumption: Tba, prop: Tba, negprop: Tba, check_impartiality: bool = True
    ):
        for b in (prop, negprop):
            if set(b.alphabet) != set(assumption.alphabet):
                raise TbaError(
                    f"alphabet of {b.name!r} differs from the assumption: "
                    f"{sorted(set(b.alphabet) ^ set(assumption.alphabet))}"
                )
        for b in (assumption, prop, negprop):
            if not b.initial:
                raise TbaError(f"{b.name!r} has no initial location")
        self.check_impartiality = check_impartiality
        self._base = (assumption, prop, negprop)
        scale = common_scale(c for b in self._base for c in b.constants())
        self.scale = scale
        a, p, n = (b.rescaled(scale) for b in self._base)
        self.assumption = a
        self.negprop_product = product(n, a)
        self.prop_product = product(p, a)
        self.tables: dict[str, NonEmptyTable] = {
            "assumption": compute_nonempty(self.assumption),
            "negprop": compute_nonempty(self.negprop_product),
            "prop": compute_nonempty(self.prop_product),
        }
        self.sets: dict[str, SymbolicStateSet] = {}
        self.reset()

    def reset(self) -> None:
        """Forget all observations; the cached liveness tables are kept."""
        self.sets = {k: SymbolicStateSet.initial(self.automaton(k)) for k in self.tables}
        self.last_sup = Fraction(0)
        self.elements: list[ObservationElement] = []
        self._last_query: Fraction | None = None
        self._committed: tuple[Verdict, Fraction] | None = None

    # -- bookkeeping -------------------------------------------------------

    def automaton(self, key: str) -> Tba:
        return {
            "assumption": self.assumption,
            "negprop": self.negprop_product,
            "prop": self.prop_product,
        }[key]

    def sizes(self) -> dict[str, int]:
        """Number of symbolic states held per reach-set."""
        return {k: len(s) for k, s in self.sets.items()}

    def _ensure_scale(self, rationals: Iterable[Fraction]) -> None:
        need = common_scale(rationals)
        new = math.lcm(self.scale, need)
        if new == self.scale:
            return
        factor = new // self.scale
        log.debug("rescaling monitor by %d", factor)
        self.scale = new
        self.assumption = self.assumption.rescaled(factor)
        self.negprop_product = self.negprop_product.rescaled(factor)
        self.prop_product = self.prop_product.rescaled(factor)
        self.tables = {k: t.rescaled(factor) for k, t in self.tables.items()}
        self.sets = {k: s.map_zones(lambda z: z.scale(factor)) for k, s in self.sets.items()}

    # -- main interface ----------------------------------------------------

    def observe(self, e: ObservationElement) -> None:
        """Advance all three reach-sets by one observation element."""
        resolve(e.formula, self._base[0])
        self._ensure_scale(e.rationals())
        for part in normalize(e):
            for key in self.sets:
                b = self.automaton(key)
                is_product = key != "assumption"
                compiled = CompiledElement(part, b, self.assumption, self.scale, is_product)
                self.sets[key] = compiled.apply(self.sets[key])
        self.last_sup = max(self.last_sup, e.hi)
        self.elements.append(e)
        if self._committed is not None and e.lo < self._committed[1]:
            # the new element may rewrite the past; later verdicts are not constrained
            self._committed = None

    def observe_all(self, elements: Iterable[ObservationElement]) -> None:
        for e in elements:
            self.observe(e)

    @property
    def tau(self) -> Fraction:
        """Latest possible time of the last event of a consistent word (0 if none)."""
        best = 0
        for _, z in self.sets["assumption"]:
            best = max(best, z.bound(z.index(TIME), 0).value)
        return Fraction(best, self.scale)

    def verdict_at(self, t) -> Verdict:
        """Verdict for the current observation extended up to time ``t``."""
        t = Fraction(t)
        if t < 0 or t < self.tau:
            raise QueryRejected(
                f"query time {t} precedes the last consistent event time {self.tau}"
            )
        self._ensure_scale([t])
        ts = t * self.scale
        assert ts.denominator == 1
        at = {k: s.at_time(int(ts)) for k, s in self.sets.items()}
        if not intersects_nonempty(at["assumption"], self.tables["assumption"]):
            v = Verdict.OUT_OF_MODEL
        elif not intersects_nonempty(at["negprop"], self.tables["negprop"]):
            v = Verdict.SAT
        elif not intersects_nonempty(at["prop"], self.tables["prop"]):
            v = Verdict.VIOLATED
        else:
            v = Verdict.UNKNOWN
        self._track(v, t)
        return v

    def _track(self, v: Verdict, t: Fraction) -> None:
        if self._last_query is not None and t < self._last_query:
            self._committed = None
        self._last_query = t
        if self._committed is not None and self.check_impartiality:
            old = self._committed[0]
            ok = v is old or v is Verdict.OUT_OF_MODEL
            if not ok:
                raise ImpartialityViolation(f"verdict {old} at {self._committed[1]} became {v} at {t}")
        if v.definitive and (self._committed is None or self._committed[0] is not v):
            self._committed = (v, t)
