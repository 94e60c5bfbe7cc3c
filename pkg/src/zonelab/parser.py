"""Line-oriented textual format for timed automata.

Grammar (one clause per line, ``#`` starts a comment)::

    clocks x y
    automaton NAME
    init L
    location L [invariant g]
    edge L1 -> L2 when g do a [reset {x,y}]
    start L with x=Q y=Q

where ``g`` is ``true`` or ``&``-separated atoms ``x REL c`` with
REL in ``< <= = >= >`` and natural ``c``; ``Q`` is a non-negative decimal
or fraction.  Parsing either yields a fully validated model or raises,
never a partial model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction

from .model import (
    ClockConstraint,
    Edge,
    Guard,
    InvalidAutomaton,
    TimedAutomaton,
    TimedState,
    guard_text,
)

_ATOM_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*(<=|>=|<|>|=)\s*(-?\d+)\s*$")
_EDGE_RE = re.compile(
    r"^edge\s+(\S+)\s*->\s*(\S+)\s+when\s+(.*?)\s+do\s+(\S+)(?:\s+reset\s*\{(.*?)\})?\s*$"
)
_ASSIGN_RE = re.compile(r"^([A-Za-z_]\w*)=(\d+(?:\.\d+)?(?:/\d+)?)$")


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


@dataclass(frozen=True)
class ParsedModel:
    automaton: TimedAutomaton
    start: TimedState | None

    def initial_process(self) -> TimedState:
        return self.start if self.start is not None else self.automaton.initial_state()


def parse_guard(text: str, line: int = 0) -> Guard:
    text = text.strip()
    if text == "true":
        return ()
    atoms = []
    for part in text.split("&"):
        m = _ATOM_RE.match(part)
        if not m:
            raise ParseError(line, f"malformed constraint {part.strip()!r}")
        clock, rel, bound = m.group(1), m.group(2), int(m.group(3))
        if bound < 0:
            raise ParseError(line, f"negative guard constant in {part.strip()!r}")
        atoms.append(ClockConstraint(clock, rel, bound))
    return tuple(atoms)


def parse_document(text: str) -> ParsedModel:
    clocks: list[str] = []
    name = ""
    initial: str | None = None
    locations: list[str] = []
    invariants: list[tuple[str, Guard]] = []
    edges: list[Edge] = []
    start_clause: tuple[int, str, dict[str, Fraction]] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(None, 1)[0]
        rest = line[len(head):].strip()
        if head == "clocks":
            if clocks:
                raise ParseError(lineno, "duplicate clocks clause")
            clocks = rest.split()
            if not clocks:
                raise ParseError(lineno, "clocks clause lists no clocks")
        elif head == "automaton":
            if not rest:
                raise ParseError(lineno, "automaton clause needs a name")
            name = rest
        elif head == "init":
            if initial is not None:
                raise ParseError(lineno, "duplicate init clause")
            if not rest:
                raise ParseError(lineno, "init clause needs a location")
            initial = rest
        elif head == "location":
            parts = rest.split(None, 1)
            if not parts:
                raise ParseError(lineno, "location clause needs a name")
            loc = parts[0]
            if loc in locations:
                raise ParseError(lineno, f"duplicate location {loc!r}")
            locations.append(loc)
            if len(parts) > 1:
                tail = parts[1]
                if not tail.startswith("invariant"):
                    raise ParseError(lineno, f"unexpected text after location name: {tail!r}")
                guard = parse_guard(tail[len("invariant"):], lineno)
                invariants.append((loc, guard))
        elif head == "edge":
            m = _EDGE_RE.match(line)
            if not m:
                raise ParseError(lineno, "malformed edge clause")
            src, dst, gtext, action, resets = m.groups()
            guard = parse_guard(gtext, lineno)
            reset_set = frozenset(x for x in (resets or "").replace(",", " ").split() if x)
            edges.append(Edge(src, guard, action, reset_set, dst))
        elif head == "start":
            m = re.match(r"^start\s+(\S+)\s+with\s+(.*)$", line)
            if not m:
                raise ParseError(lineno, "malformed start clause")
            loc, assigns = m.group(1), m.group(2)
            values: dict[str, Fraction] = {}
            for token in assigns.split():
                am = _ASSIGN_RE.match(token)
                if not am:
                    raise ParseError(lineno, f"malformed start assignment {token!r}")
                values[am.group(1)] = Fraction(am.group(2))
            start_clause = (lineno, loc, values)
        else:
            raise ParseError(lineno, f"unknown clause {head!r}")

    if not clocks:
        raise ParseError(0, "missing clocks clause")
    if initial is None:
        raise ParseError(0, "missing init clause")
    try:
        auto = TimedAutomaton(
            name=name or "A",
            clocks=tuple(clocks),
            locations=tuple(locations),
            initial=initial,
            edges=tuple(edges),
            invariants=tuple(invariants),
        )
    except InvalidAutomaton as exc:
        raise ParseError(0, str(exc)) from exc

    start = None
    if start_clause is not None:
        lineno, loc, values = start_clause
        unknown = set(values) - set(auto.clocks)
        if unknown:
            raise ParseError(lineno, f"start assigns unknown clocks {sorted(unknown)}")
        try:
            start = auto.make_state(loc, values)
        except InvalidAutomaton as exc:
            raise ParseError(lineno, str(exc)) from exc
    return ParsedModel(auto, start)


def print_document(model: ParsedModel) -> str:
    """Canonical printer; ``parse(print(parse(t)))`` equals ``parse(t)``."""
    auto = model.automaton
    lines = [f"clocks {' '.join(auto.clocks)}", f"automaton {auto.name}", f"init {auto.initial}"]
    inv = dict(auto.invariants)
    for loc in auto.locations:
        if loc in inv and inv[loc]:
            lines.append(f"location {loc} invariant {guard_text(inv[loc])}")
        else:
            lines.append(f"location {loc}")
    for e in auto.edges:
        line = f"edge {e.source} -> {e.target} when {guard_text(e.guard)} do {e.action}"
        if e.resets:
            line += " reset {" + ",".join(sorted(e.resets)) + "}"
        lines.append(line)
    if model.start is not None:
        assigns = " ".join(
            f"{x}={v}" for x, v in zip(auto.clocks, model.start.values)
        )
        lines.append(f"start {model.start.location} with {assigns}")
    return "\n".join(lines) + "\n"


def to_json_dict(model: ParsedModel) -> dict:
    auto = model.automaton
    doc = {
        "automaton": auto.name,
        "clocks": list(auto.clocks),
        "locations": list(auto.locations),
        "initial": auto.initial,
        "invariants": {
            loc: [{"clock": c.clock, "rel": c.rel, "bound": c.bound} for c in guard]
            for loc, guard in auto.invariants
        },
        "edges": [
            {
                "source": e.source,
                "guard": [{"clock": c.clock, "rel": c.rel, "bound": c.bound} for c in e.guard],
                "action": e.action,
                "resets": sorted(e.resets),
                "target": e.target,
            }
            for e in auto.edges
        ],
        "start": None,
    }
    if model.start is not None:
        doc["start"] = {
            "location": model.start.location,
            "values": {x: str(v) for x, v in zip(auto.clocks, model.start.values)},
        }
    return doc


def to_json(model: ParsedModel) -> str:
    return json.dumps(to_json_dict(model), sort_keys=True, indent=2) + "\n"
