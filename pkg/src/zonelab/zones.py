"""Convex clock zones as difference bound matrices.

A zone over clocks ``(x1..xn)`` is stored as an ``(n+1) x (n+1)`` matrix of
bounds on differences ``xi - xj`` where index 0 is the constant reference
clock.  Matrices are kept in canonical (shortest-path-closed) form at all
times; the empty zone is a distinguished marker.  Guards in the input
language are diagonal-free, but resets and delay closure create diagonal
constraints, so the matrix carries them throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .model import ClockConstraint, Guard


@dataclass(frozen=True)
class Bound:
    """An upper bound ``value`` on a clock difference, strict or weak, or +infinity."""

    value: int = 0
    strict: bool = False
    infinite: bool = False

    def key(self):
        if self.infinite:
            return (1, 0, 0)
        return (0, self.value, 0 if self.strict else 1)

    def __lt__(self, other: "Bound") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "Bound") -> bool:
        return self.key() <= other.key()

    def __add__(self, other: "Bound") -> "Bound":
        if self.infinite or other.infinite:
            return INF
        return Bound(self.value + other.value, self.strict or other.strict)

    def negated(self) -> "Bound":
        """Complement facet: the negation of ``diff <= value`` is ``-diff < -value``."""
        if self.infinite:
            raise ValueError("cannot negate an infinite bound")
        return Bound(-self.value, not self.strict)

    def admits(self, diff: Fraction) -> bool:
        if self.infinite:
            return True
        return diff < self.value if self.strict else diff <= self.value

    def text(self) -> str:
        if self.infinite:
            return "inf"
        return f"{'<' if self.strict else '<='}{self.value}"


INF = Bound(infinite=True)
WEAK_ZERO = Bound(0, False)

_REL_SPLIT = {"<": ("<", ">="), "<=": ("<=", ">"), ">=": (">=", "<"), ">": (">", "<=")}


def _atom_entries(clocks: Sequence[str], atom: ClockConstraint) -> list[tuple[int, int, Bound]]:
    """Matrix entries tightening a zone with one diagonal-free atom."""
    i = clocks.index(atom.clock) + 1
    rel, c = atom.rel, atom.bound
    if rel == "<":
        return [(i, 0, Bound(c, True))]
    if rel == "<=":
        return [(i, 0, Bound(c, False))]
    if rel == ">":
        return [(0, i, Bound(-c, True))]
    if rel == ">=":
        return [(0, i, Bound(-c, False))]
    return [(i, 0, Bound(c, False)), (0, i, Bound(-c, False))]


@dataclass(frozen=True)
class Zone:
    clocks: tuple[str, ...]
    rows: tuple[tuple[Bound, ...], ...] | None  # None marks the empty zone

    # -- construction -------------------------------------------------------

    @staticmethod
    def universal(clocks: Sequence[str]) -> "Zone":
        n = len(clocks) + 1
        rows = [[INF] * n for _ in range(n)]
        for i in range(n):
            rows[i][i] = WEAK_ZERO
            rows[0][i] = WEAK_ZERO  # clocks never go negative
        return Zone(tuple(clocks), tuple(tuple(r) for r in rows))

    @staticmethod
    def zero_point(clocks: Sequence[str]) -> "Zone":
        n = len(clocks) + 1
        return Zone(tuple(clocks), tuple(tuple(WEAK_ZERO for _ in range(n)) for _ in range(n)))

    @staticmethod
    def empty(clocks: Sequence[str]) -> "Zone":
        return Zone(tuple(clocks), None)

    @staticmethod
    def from_guard(clocks: Sequence[str], guard: Guard) -> "Zone":
        return Zone.universal(clocks).intersect_guard(guard)

    # -- basics --------------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return self.rows is None

    @cached_property
    def _index(self) -> dict[str, int]:
        return {x: i + 1 for i, x in enumerate(self.clocks)}

    def _dim(self) -> int:
        return len(self.clocks) + 1

    def _with_rows(self, rows: list[list[Bound]] | None) -> "Zone":
        if rows is None:
            return Zone(self.clocks, None)
        return Zone(self.clocks, tuple(tuple(r) for r in rows))

    def _mutable(self) -> list[list[Bound]]:
        assert self.rows is not None
        return [list(r) for r in self.rows]

    # -- canonical form ------------------------------------------------------

    def canonical(self) -> "Zone":
        """Shortest-path closure; detects emptiness via a negative cycle."""
        if self.is_empty:
            return self
        rows = _closure(self._mutable())
        return self._with_rows(rows)

    # -- membership / comparison ---------------------------------------------

    def contains(self, values: Sequence[Fraction]) -> bool:
        if self.is_empty:
            return False
        vals = (Fraction(0),) + tuple(Fraction(v) for v in values)
        n = self._dim()
        for i in range(n):
            for j in range(n):
                if not self.rows[i][j].admits(vals[i] - vals[j]):
                    return False
        return True

    def includes(self, other: "Zone") -> bool:
        """Subset test; both zones must be canonical."""
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        n = self._dim()
        return all(other.rows[i][j] <= self.rows[i][j] for i in range(n) for j in range(n))

    def intersect(self, other: "Zone") -> "Zone":
        if self.is_empty or other.is_empty:
            return Zone(self.clocks, None)
        rows = self._mutable()
        n = self._dim()
        for i in range(n):
            for j in range(n):
                if other.rows[i][j] < rows[i][j]:
                    rows[i][j] = other.rows[i][j]
        return self._with_rows(_closure(rows))

    def intersects(self, other: "Zone") -> bool:
        return not self.intersect(other).is_empty

    # -- operations ----------------------------------------------------------

    def intersect_guard(self, guard: Guard) -> "Zone":
        if self.is_empty:
            return self
        rows = self._mutable()
        for atom in guard:
            if atom.clock not in self._index:
                raise KeyError(f"unknown clock {atom.clock!r}")
            for i, j, b in _atom_entries(self.clocks, atom):
                if b < rows[i][j]:
                    rows[i][j] = b
        return self._with_rows(_closure(rows))

    def with_entry(self, i: int, j: int, bound: Bound) -> "Zone":
        if self.is_empty:
            return self
        rows = self._mutable()
        if bound < rows[i][j]:
            rows[i][j] = bound
        return self._with_rows(_closure(rows))

    def delay_closure(self) -> "Zone":
        """Future of the zone: drop upper bounds, keep lower bounds and diagonals."""
        if self.is_empty:
            return self
        rows = self._mutable()
        for i in range(1, self._dim()):
            rows[i][0] = INF
        return self._with_rows(_closure(rows))

    def past_closure(self) -> "Zone":
        """Delay predecessors within the non-negative orthant."""
        if self.is_empty:
            return self
        rows = self._mutable()
        for j in range(1, self._dim()):
            rows[0][j] = WEAK_ZERO
        return self._with_rows(_closure(rows))

    def reset(self, resets: Iterable[str]) -> "Zone":
        """Image under setting each clock in ``resets`` to zero."""
        if self.is_empty:
            return self
        rows = self._mutable()
        n = self._dim()
        for x in resets:
            i = self._index[x]
            for j in range(n):
                rows[i][j] = rows[0][j]
                rows[j][i] = rows[j][0]
            rows[i][i] = WEAK_ZERO
        return self._with_rows(_closure(rows))

    def reset_preimage(self, resets: Iterable[str]) -> "Zone":
        """All valuations whose reset image lies in this zone."""
        if self.is_empty:
            return self
        reset_idx = {self._index[x] for x in resets}
        out = Zone.universal(self.clocks)._mutable()
        n = self._dim()
        for i in range(n):
            for j in range(n):
                b = self.rows[i][j]
                if b.infinite:
                    continue
                # Translate constraints on reset clocks to constraints on 0.
                ii = 0 if i in reset_idx else i
                jj = 0 if j in reset_idx else j
                if ii == jj:
                    if not b.admits(Fraction(0)):
                        return Zone(self.clocks, None)
                    continue
                if b < out[ii][jj]:
                    out[ii][jj] = b
        return self._with_rows(_closure(out))

    def extrapolate(self, max_consts: Mapping[str, int]) -> "Zone":
        """Maximal-constants widening; the result is a canonical superset."""
        if self.is_empty:
            return self
        ks = [0] + [max_consts[x] for x in self.clocks]
        rows = self._mutable()
        n = self._dim()
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                b = rows[i][j]
                if b.infinite:
                    continue
                if b.value > ks[i]:
                    rows[i][j] = INF
                elif b.value < -ks[j]:
                    rows[i][j] = Bound(-ks[j], True)
        return self._with_rows(_closure(rows))

    def subtract(self, other: "Zone") -> list["Zone"]:
        """``self`` minus ``other`` as pairwise-disjoint convex pieces."""
        if self.is_empty:
            return []
        if other.is_empty:
            return [self]
        pieces: list[Zone] = []
        remainder = self
        n = self._dim()
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                facet = other.rows[i][j]
                if facet.infinite:
                    continue
                outside = remainder.with_entry(j, i, facet.negated())
                if not outside.is_empty:
                    pieces.append(outside)
                remainder = remainder.with_entry(i, j, facet)
                if remainder.is_empty:
                    return pieces
        return pieces

    # -- per-clock bounds ------------------------------------------------------

    def lower_bound(self, clock: str) -> Bound:
        """Bound on ``0 - clock``; value -c means clock >= c."""
        assert self.rows is not None
        return self.rows[0][self._index[clock]]

    def upper_bound(self, clock: str) -> Bound:
        assert self.rows is not None
        return self.rows[self._index[clock]][0]

    # -- rendering -------------------------------------------------------------

    def text(self) -> str:
        """Sorted conjunction like ``1<=x<2 & x-y=1``; ``true``/``false`` when degenerate."""
        if self.is_empty:
            return "false"
        chunks: list[str] = []
        for x in sorted(self.clocks):
            i = self._index[x]
            lo, up = self.rows[0][i], self.rows[i][0]
            if not lo.infinite and not up.infinite and not lo.strict and not up.strict \
                    and -lo.value == up.value:
                chunks.append(f"{x}={up.value}")
                continue
            lower_txt = ""
            if not lo.infinite and (lo.value < 0 or lo.strict):
                lower_txt = f"{-lo.value}{'<' if lo.strict else '<='}"
            upper_txt = ""
            if not up.infinite:
                upper_txt = f"{'<' if up.strict else '<='}{up.value}"
            if lower_txt or upper_txt:
                chunks.append(f"{lower_txt}{x}{upper_txt}")
        for a in sorted(self.clocks):
            for b in sorted(self.clocks):
                if a >= b:
                    continue
                i, j = self._index[a], self._index[b]
                d1, d2 = self.rows[i][j], self.rows[j][i]
                if not d1.infinite and not d2.infinite and not d1.strict and not d2.strict \
                        and d1.value == -d2.value:
                    chunks.append(f"{a}-{b}={d1.value}")
                    continue
                if not d1.infinite and d1 < self.rows[i][0] + self.rows[0][j]:
                    chunks.append(f"{a}-{b}{'<' if d1.strict else '<='}{d1.value}")
                if not d2.infinite and d2 < self.rows[j][0] + self.rows[0][i]:
                    chunks.append(f"{b}-{a}{'<' if d2.strict else '<='}{d2.value}")
        if not chunks:
            return "true"
        return " & ".join(sorted(chunks))


def _closure(rows: list[list[Bound]]) -> tuple[tuple[Bound, ...], ...] | None:
    """Floyd-Warshall tightening; None on a negative cycle (empty zone)."""
    n = len(rows)
    for k in range(n):
        for i in range(n):
            rik = rows[i][k]
            if rik.infinite:
                continue
            for j in range(n):
                cand = rik + rows[k][j]
                if cand < rows[i][j]:
                    rows[i][j] = cand
        for i in range(n):
            if rows[i][i] < WEAK_ZERO:
                return None
    return tuple(tuple(r) for r in rows)


def split_by_atom(cells: list[Zone], atom: ClockConstraint) -> list[Zone]:
    """Refine convex cells so the atom has a constant truth value on each."""
    out: list[Zone] = []
    for cell in cells:
        if atom.rel == "=":
            parts = [
                cell.intersect_guard((ClockConstraint(atom.clock, "<", atom.bound),)),
                cell.intersect_guard((ClockConstraint(atom.clock, "=", atom.bound),)),
                cell.intersect_guard((ClockConstraint(atom.clock, ">", atom.bound),)),
            ]
        else:
            neg_rel = _REL_SPLIT[atom.rel][1]
            parts = [
                cell.intersect_guard((atom,)),
                cell.intersect_guard((ClockConstraint(atom.clock, neg_rel, atom.bound),)),
            ]
        out.extend(p for p in parts if not p.is_empty)
    return out


def canonical_decomposition(base: Zone, atoms: Iterable[ClockConstraint]) -> list[Zone]:
    """Partition ``base`` into maximal convex cells on which every atom is constant."""
    cells = [base] if not base.is_empty else []
    seen: set[tuple] = set()
    for atom in atoms:
        key = (atom.clock, atom.rel, atom.bound)
        if key in seen:
            continue
        seen.add(key)
        cells = split_by_atom(cells, atom)
    return cells
