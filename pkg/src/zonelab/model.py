"""Timed-automaton data model and its concrete timed-transition-system semantics.

All values are immutable after construction; every operation here is pure.
Clock valuations and delays are exact rationals so that comparisons against
integer guard constants never suffer rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

RELATIONS = ("<", "<=", "=", ">=", ">")

#: Names that may not be used as edge actions: they stand for the delay
#: pseudo-action on zone graphs.
RESERVED_ACTIONS = ("eps", "ε")


class InvalidAutomaton(ValueError):
    """Raised when a model violates a structural constraint."""


@dataclass(frozen=True)
class ClockConstraint:
    """A single atom ``clock REL bound`` with a natural-number bound."""

    clock: str
    rel: str
    bound: int

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise InvalidAutomaton(f"bad relation {self.rel!r}")
        if not isinstance(self.bound, int) or self.bound < 0:
            raise InvalidAutomaton(f"guard constant must be a natural number, got {self.bound!r}")

    def satisfied_by(self, value: Fraction) -> bool:
        if self.rel == "<":
            return value < self.bound
        if self.rel == "<=":
            return value <= self.bound
        if self.rel == "=":
            return value == self.bound
        if self.rel == ">=":
            return value >= self.bound
        return value > self.bound

    def is_upper(self) -> bool:
        return self.rel in ("<", "<=")

    def __str__(self):
        return f"{self.clock}{self.rel}{self.bound}"


Guard = tuple[ClockConstraint, ...]


def guard_satisfied(guard: Guard, valuation: Mapping[str, Fraction]) -> bool:
    return all(c.satisfied_by(valuation[c.clock]) for c in guard)


def guard_text(guard: Guard) -> str:
    if not guard:
        return "true"
    return " & ".join(str(c) for c in guard)


@dataclass(frozen=True)
class Edge:
    source: str
    guard: Guard
    action: str
    resets: frozenset[str]
    target: str


@dataclass(frozen=True)
class TimedState:
    """A process ``(location, valuation)``; values are ordered like the automaton's clocks."""

    location: str
    values: tuple[Fraction, ...]

    def valuation(self, clocks: tuple[str, ...]) -> dict[str, Fraction]:
        return dict(zip(clocks, self.values))


@dataclass(frozen=True)
class TimedAutomaton:
    name: str
    clocks: tuple[str, ...]
    locations: tuple[str, ...]
    initial: str
    edges: tuple[Edge, ...]
    invariants: tuple[tuple[str, Guard], ...]

    def __post_init__(self):
        if not self.clocks:
            raise InvalidAutomaton("an automaton needs at least one clock")
        if not self.locations:
            raise InvalidAutomaton("an automaton needs at least one location")
        if len(set(self.clocks)) != len(self.clocks):
            raise InvalidAutomaton("duplicate clock names")
        if len(set(self.locations)) != len(self.locations):
            raise InvalidAutomaton("duplicate location names")
        if self.initial not in self.locations:
            raise InvalidAutomaton(f"initial location {self.initial!r} is not declared")
        known = set(self.clocks)
        for loc, guard in self.invariants:
            if loc not in self.locations:
                raise InvalidAutomaton(f"invariant on unknown location {loc!r}")
            for c in guard:
                if c.clock not in known:
                    raise InvalidAutomaton(f"invariant uses unknown clock {c.clock!r}")
                # Upper bounds only: keeps delay steps convex in every location.
                if not c.is_upper():
                    raise InvalidAutomaton(f"invariants must be upper bounds, got {c}")
        for e in self.edges:
            if e.source not in self.locations or e.target not in self.locations:
                raise InvalidAutomaton(f"edge {e.source}->{e.target} uses an unknown location")
            if e.action in RESERVED_ACTIONS:
                raise InvalidAutomaton(f"action name {e.action!r} is reserved for delay moves")
            if not e.resets <= known:
                raise InvalidAutomaton(f"edge resets unknown clocks {sorted(e.resets - known)}")
            for c in e.guard:
                if c.clock not in known:
                    raise InvalidAutomaton(f"guard uses unknown clock {c.clock!r}")

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(sorted({e.action for e in self.edges}))

    def invariant(self, location: str) -> Guard:
        for loc, guard in self.invariants:
            if loc == location:
                return guard
        return ()

    def clock_index(self, clock: str) -> int:
        return self.clocks.index(clock)

    def satisfies_invariant(self, location: str, values: tuple[Fraction, ...]) -> bool:
        valuation = dict(zip(self.clocks, values))
        return guard_satisfied(self.invariant(location), valuation)

    def make_state(self, location: str, valuation: Mapping[str, Fraction]) -> TimedState:
        if location not in self.locations:
            raise InvalidAutomaton(f"unknown location {location!r}")
        values = tuple(Fraction(valuation.get(x, 0)) for x in self.clocks)
        if any(v < 0 for v in values):
            raise InvalidAutomaton("clock values must be non-negative")
        if not self.satisfies_invariant(location, values):
            raise InvalidAutomaton(
                f"valuation violates the invariant of {location}: "
                f"{guard_text(self.invariant(location))}"
            )
        return TimedState(location, values)

    def initial_state(self) -> TimedState:
        return self.make_state(self.initial, {})


def tlts_step(auto: TimedAutomaton, state: TimedState, label) -> list[TimedState]:
    """All successors of ``state`` under an action name or a rational delay.

    An empty list means the move is not available; it is never an error.
    Delay steps are deterministic, action steps may branch over edges.
    """
    if isinstance(label, str):
        valuation = state.valuation(auto.clocks)
        out = []
        for e in auto.edges:
            if e.source != state.location or e.action != label:
                continue
            if not guard_satisfied(e.guard, valuation):
                continue
            values = tuple(
                Fraction(0) if x in e.resets else v for x, v in zip(auto.clocks, state.values)
            )
            if auto.satisfies_invariant(e.target, values):
                out.append(TimedState(e.target, values))
        # Deterministic order regardless of edge declaration order.
        return sorted(out, key=lambda s: (s.location, s.values))
    delay = Fraction(label)
    if delay < 0:
        raise ValueError("delays must be non-negative")
    values = tuple(v + delay for v in state.values)
    # Invariants are convex upper bounds, so checking the endpoint covers
    # every intermediate instant of the delay.
    if auto.satisfies_invariant(state.location, values):
        return [TimedState(state.location, values)]
    return []


def delays_enabled_until(auto: TimedAutomaton, location: str) -> int | None:
    """Largest integer constant bounding delays in ``location`` (None = unbounded)."""
    guard = auto.invariant(location)
    if not guard:
        return None
    return min(c.bound for c in guard)


def all_guard_constants(auto: TimedAutomaton, clock: str) -> Iterable[int]:
    for e in auto.edges:
        for c in e.guard:
            if c.clock == clock:
                yield c.bound
    for _, guard in auto.invariants:
        for c in guard:
            if c.clock == clock:
                yield c.bound
