"""Difference bound matrices over a fixed, ordered clock set.

Bounds are stored in the usual packed integer encoding: a bound ``(v, <=)``
is ``2*v + 1`` and ``(v, <)`` is ``2*v``.  With this encoding bound
comparison is plain integer comparison, and ``INF`` is a large sentinel
that absorbs addition.

Every :class:`Zone` is kept in canonical (shortest-path closed) form.
Entry ``(i, j)`` of the matrix bounds ``x_i - x_j``; index 0 is the
reference clock whose value is always 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from operator import ge as _ge
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

INF = 1 << 62
LE_ZERO = 1
LT_ZERO = 0
REF = "0"
TIME = "time"


class Bound(NamedTuple):
    """Human-facing view of one packed bound."""

    value: int
    strict: bool

    @classmethod
    def infinity(cls) -> "Bound":
        return cls(INF, True)

    @property
    def is_inf(self) -> bool:
        return self.value >= INF

    def raw(self) -> int:
        if self.is_inf:
            return INF
        return 2 * self.value + (0 if self.strict else 1)

    @classmethod
    def from_raw(cls, raw: int) -> "Bound":
        if raw >= INF:
            return cls.infinity()
        return cls(raw >> 1, not (raw & 1))

    def __add__(self, other):  # type: ignore[override]
        return Bound.from_raw(bound_add(self.raw(), other.raw()))

    # order by tightness: a strict bound is below the weak one at the same value
    def __lt__(self, other):  # type: ignore[override]
        return self.raw() < other.raw()

    def __le__(self, other):  # type: ignore[override]
        return self.raw() <= other.raw()

    def __gt__(self, other):  # type: ignore[override]
        return self.raw() > other.raw()

    def __ge__(self, other):  # type: ignore[override]
        return self.raw() >= other.raw()

    def __str__(self) -> str:
        if self.is_inf:
            return "<inf"
        return f"{'<' if self.strict else '<='}{self.value}"


def le(v: int) -> int:
    return 2 * v + 1


def lt(v: int) -> int:
    return 2 * v


def bound_add(a: int, b: int) -> int:
    if a >= INF or b >= INF:
        return INF
    return a + b - ((a | b) & 1)


def bound_negate(raw: int) -> int:
    """Complement of ``x_i - x_j ~ v`` expressed as a bound on ``x_j - x_i``."""
    return 1 - raw


def _close(m: list[int], n: int) -> bool:
    """Floyd-Warshall in place; returns False when a negative cycle exists."""
    for k in range(n):
        rk = k * n
        for i in range(n):
            ri = i * n
            mik = m[ri + k]
            if mik >= INF:
                continue
            for j in range(n):
                mkj = m[rk + j]
                if mkj >= INF:
                    continue
                s = mik + mkj - ((mik | mkj) & 1)
                if s < m[ri + j]:
                    m[ri + j] = s
        if m[k * n + k] < LE_ZERO:
            return False
    for i in range(n):
        if m[i * n + i] < LE_ZERO:
            return False
    return True


def _close_ij(m: list[int], n: int, i: int, j: int) -> bool:
    """Restore canonical form after tightening only entry (i, j)."""
    mij = m[i * n + j]
    if bound_add(mij, m[j * n + i]) < LE_ZERO:
        return False
    # first propagate through the new edge into row i and column j
    for k in range(n):
        rk = k * n
        mki = m[rk + i]
        if mki >= INF:
            continue
        kij = bound_add(mki, mij)
        for l in range(n):
            mjl = m[j * n + l]
            if mjl >= INF:
                continue
            s = kij + mjl - ((kij | mjl) & 1)
            if s < m[rk + l]:
                m[rk + l] = s
    return True


@dataclass(frozen=True, eq=True)
class Zone:
    """An immutable, canonical clock zone.

    ``clocks[0]`` is always the reference clock ``"0"``.
    """

    clocks: tuple[str, ...]
    m: tuple[int, ...]

    # -- construction ------------------------------------------------------

    @staticmethod
    def _empty_matrix(n: int) -> tuple[int, ...]:
        m = [LE_ZERO] * (n * n)
        m[0] = LT_ZERO - 2  # negative diagonal flags emptiness
        return tuple(m)

    @classmethod
    def empty(cls, clocks: Sequence[str]) -> "Zone":
        clocks = _with_ref(clocks)
        return cls(clocks, cls._empty_matrix(len(clocks)))

    @classmethod
    def zero(cls, clocks: Sequence[str]) -> "Zone":
        """All clocks equal to 0."""
        clocks = _with_ref(clocks)
        n = len(clocks)
        return cls(clocks, (LE_ZERO,) * (n * n))

    @classmethod
    def universal(cls, clocks: Sequence[str]) -> "Zone":
        """All nonnegative valuations."""
        clocks = _with_ref(clocks)
        n = len(clocks)
        m = [INF] * (n * n)
        for i in range(n):
            m[i * n + i] = LE_ZERO
            m[i] = LE_ZERO  # row 0: 0 - x_i <= 0
        return cls(clocks, tuple(m))

    @classmethod
    def from_matrix(cls, clocks: Sequence[str], matrix: Iterable[int]) -> "Zone":
        """Build a zone from a raw (not necessarily canonical) bound matrix."""
        clocks = _with_ref(clocks)
        n = len(clocks)
        m = list(matrix)
        if len(m) != n * n:
            raise ValueError(f"matrix needs {n * n} entries, got {len(m)}")
        return cls._finish(clocks, m, _close(m, n))

    @classmethod
    def from_constraints(
        cls, clocks: Sequence[str], constraints: Iterable[tuple[str, str, int]]
    ) -> "Zone":
        """Constraints are ``(x, y, raw)`` meaning ``x - y`` bounded by ``raw``;
        use ``"0"`` for the reference clock."""
        z = cls.universal(clocks)
        for x, y, raw in constraints:
            z = z.constrain(z.index(x), z.index(y), raw)
        return z

    @classmethod
    def _finish(cls, clocks, m: list[int], ok: bool) -> "Zone":
        if not ok:
            return cls(clocks, cls._empty_matrix(len(clocks)))
        return cls(clocks, tuple(m))

    # -- basic queries -----------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.clocks)

    def index(self, clock: str) -> int:
        try:
            return self.clocks.index(clock)
        except ValueError:
            raise KeyError(f"unknown clock {clock!r}") from None

    def is_empty(self) -> bool:
        return self.m[0] < LE_ZERO

    def __bool__(self) -> bool:
        return not self.is_empty()

    def bound(self, i: int, j: int) -> Bound:
        return Bound.from_raw(self.m[i * self.dim + j])

    def raw(self, i: int, j: int) -> int:
        return self.m[i * self.dim + j]

    def contains(self, valuation: Mapping[str, Fraction | int | float]) -> bool:
        """Membership of a concrete valuation (missing clocks are an error)."""
        if self.is_empty():
            return False
        vals = [Fraction(0)] + [Fraction(valuation[c]) for c in self.clocks[1:]]
        if any(v < 0 for v in vals):
            return False
        n = self.dim
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                raw = self.m[i * n + j]
                if raw >= INF:
                    continue
                d = vals[i] - vals[j]
                v = raw >> 1
                if d > v or (d == v and not raw & 1):
                    return False
        return True

    # -- operations --------------------------------------------------------

    def constrain(self, i: int, j: int, raw: int) -> "Zone":
        """Intersect with ``x_i - x_j`` bounded by ``raw``."""
        if self.is_empty():
            return self
        n = self.dim
        if raw >= self.m[i * n + j]:
            return self
        m = list(self.m)
        m[i * n + j] = raw
        return Zone._finish(self.clocks, m, _close_ij(m, n, i, j))

    def restrict(self, clock: str, rel: str, const: int) -> "Zone":
        """Intersect with the atomic constraint ``clock rel const``."""
        i = self.index(clock)
        if rel == "<":
            return self.constrain(i, 0, lt(const))
        if rel == "<=":
            return self.constrain(i, 0, le(const))
        if rel == ">":
            return self.constrain(0, i, lt(-const))
        if rel == ">=":
            return self.constrain(0, i, le(-const))
        if rel == "==":
            return self.constrain(i, 0, le(const)).constrain(0, i, le(-const))
        raise ValueError(f"unknown relation {rel!r}")

    def up(self) -> "Zone":
        """Delay closure: drop every upper bound on single clocks."""
        if self.is_empty():
            return self
        n = self.dim
        m = list(self.m)
        for i in range(1, n):
            m[i * n] = INF
        return Zone(self.clocks, tuple(m))

    def down(self) -> "Zone":
        """Time predecessors: valuations from which some delay reaches the zone."""
        if self.is_empty():
            return self
        n = self.dim
        m = list(self.m)
        for j in range(1, n):
            best = LE_ZERO
            for i in range(1, n):
                if i != j and m[i * n + j] < best:
                    best = m[i * n + j]
            m[j] = best
        # lowering row 0 to column minima keeps a canonical matrix canonical
        return Zone(self.clocks, tuple(m))

    def reset(self, clocks: Iterable[str]) -> "Zone":
        """Set the given clocks to 0; the global clock ``time`` is never reset."""
        clocks = list(clocks)
        if TIME in clocks:
            raise ValueError("the global clock 'time' cannot be reset")
        idx = [self.index(c) for c in clocks]
        if not idx or self.is_empty():
            return self
        n = self.dim
        m = list(self.m)
        for x in idx:
            rx = x * n
            for j in range(n):
                m[rx + j] = m[j]  # x - x_j  <=  0 - x_j
                m[j * n + x] = m[j * n]  # x_j - x  <=  x_j - 0
            m[rx + x] = LE_ZERO
        return Zone(self.clocks, tuple(m))

    def free(self, clocks: Iterable[str]) -> "Zone":
        """Remove all constraints on the given clocks (inverse of reset)."""
        idx = [self.index(c) for c in clocks]
        if not idx or self.is_empty():
            return self
        n = self.dim
        m = list(self.m)
        for x in idx:
            rx = x * n
            for j in range(n):
                if j != x:
                    m[rx + j] = INF
                    m[j * n + x] = m[j * n]
            m[x] = LE_ZERO
            m[rx + x] = LE_ZERO
        return Zone(self.clocks, tuple(m))

    def intersect(self, other: "Zone") -> "Zone":
        if self.clocks != other.clocks:
            raise ValueError("zones over different clock sets")
        if self.is_empty():
            return self
        if other.is_empty():
            return other
        n = self.dim
        m = [a if a < b else b for a, b in zip(self.m, other.m)]
        return Zone._finish(self.clocks, m, _close(m, n))

    def includes(self, other: "Zone") -> bool:
        """True iff every valuation of ``other`` lies in ``self``."""
        if other.is_empty():
            return True
        if self.is_empty():
            return False
        return all(map(_ge, self.m, other.m))

    def intersects(self, other: "Zone") -> bool:
        return not self.intersect(other).is_empty()

    def extrapolate(self, k: Mapping[str, int | None]) -> "Zone":
        """Classic max-constant extrapolation.

        ``k`` maps clock names to their maximal constant; a missing entry or
        ``None`` exempts the clock.
        """
        if self.is_empty():
            return self
        n = self.dim
        ks = [0] + [k.get(c) for c in self.clocks[1:]]
        m = list(self.m)
        changed = False
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                raw = m[i * n + j]
                if raw >= INF:
                    continue
                ki, kj = ks[i], ks[j]
                if i != 0 and ki is not None and raw > le(ki):
                    m[i * n + j] = INF
                    changed = True
                elif kj is not None and raw < lt(-kj):
                    m[i * n + j] = lt(-kj)
                    changed = True
        if not changed:
            return self
        return Zone._finish(self.clocks, m, _close(m, n))

    def project(self, keep: Sequence[str]) -> "Zone":
        """Existentially quantify away every clock not in ``keep``."""
        keep = _with_ref(keep)
        idx = [self.index(c) for c in keep]
        if self.is_empty():
            return Zone.empty(keep)
        n = self.dim
        m = tuple(self.m[i * n + j] for i in idx for j in idx)
        return Zone(keep, m)

    def extend(self, clocks: Sequence[str]) -> "Zone":
        """Embed into a larger clock set; new clocks are unconstrained."""
        clocks = _with_ref(clocks)
        if self.is_empty():
            return Zone.empty(clocks)
        z = Zone.universal(clocks)
        pos = [clocks.index(c) for c in self.clocks]
        n, nn = self.dim, len(clocks)
        m = list(z.m)
        for a, i in enumerate(pos):
            for b, j in enumerate(pos):
                m[i * nn + j] = self.m[a * n + b]
        return Zone._finish(clocks, m, _close(m, nn))

    def rename(self, mapping: Mapping[str, str]) -> "Zone":
        return Zone(tuple(mapping.get(c, c) for c in self.clocks), self.m)

    def scale(self, factor: int) -> "Zone":
        """Multiply every constant by a positive integer."""
        if factor == 1 or self.is_empty():
            return self
        m = tuple(
            INF if raw >= INF else 2 * (raw >> 1) * factor + (raw & 1) for raw in self.m
        )
        return Zone(self.clocks, m)

    def subtract(self, other: "Zone") -> list["Zone"]:
        """``self \\ other`` as a list of pairwise disjoint zones."""
        if self.is_empty():
            return []
        if other.is_empty() or not self.intersects(other):
            return [self]
        n = self.dim
        pieces = []
        cur = self
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                raw = other.m[i * n + j]
                if raw >= INF or raw >= cur.m[i * n + j]:
                    continue
                outside = cur.constrain(j, i, bound_negate(raw))
                if not outside.is_empty():
                    pieces.append(outside)
                cur = cur.constrain(i, j, raw)
                if cur.is_empty():
                    return pieces
        return pieces

    # -- display -----------------------------------------------------------

    def constraints(self) -> list[str]:
        """Readable list of the non-trivial constraints."""
        if self.is_empty():
            return ["false"]
        out = []
        n = self.dim
        for i in range(n):
            for j in range(n):
                raw = self.m[i * n + j]
                if i == j or raw >= INF:
                    continue
                b = Bound.from_raw(raw)
                op = "<" if b.strict else "<="
                if j == 0:
                    out.append(f"{self.clocks[i]}{op}{b.value}")
                elif i == 0:
                    if raw == LE_ZERO:
                        continue
                    op = ">" if b.strict else ">="
                    out.append(f"{self.clocks[j]}{op}{-b.value}")
                else:
                    out.append(f"{self.clocks[i]}-{self.clocks[j]}{op}{b.value}")
        return out

    def __str__(self) -> str:
        cs = self.constraints()
        return "{" + ", ".join(cs) + "}" if cs else "{true}"


def _with_ref(clocks: Sequence[str]) -> tuple[str, ...]:
    clocks = tuple(clocks)
    if clocks and clocks[0] == REF:
        return clocks
    if REF in clocks:
        raise ValueError("reference clock must come first")
    return (REF,) + clocks


def subtract_all(zone: Zone, others: Iterable[Zone]) -> list[Zone]:
    rest = [zone] if not zone.is_empty() else []
    for o in others:
        rest = [p for r in rest for p in r.subtract(o)]
        if not rest:
            break
    return rest


def covered(zone: Zone, federation: Sequence[Zone]) -> bool:
    """True iff ``zone`` is contained in the union of ``federation``."""
    if zone.is_empty():
        return True
    if any(f.includes(zone) for f in federation):
        return True
    return not subtract_all(zone, [f for f in federation if f.intersects(zone)])
