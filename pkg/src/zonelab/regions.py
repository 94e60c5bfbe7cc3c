"""Brute-force ground truth: classical region graphs and definitional checkers.

This module deliberately avoids the zone machinery.  Regions are encoded by
integer parts (clamped at per-clock maximal constants), zero-fraction flags,
and the ordering of fractional parts; successors are computed by delaying a
canonical representative valuation.  The relation checkers run the textbook
greatest-fixpoint definitions on the finite region graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .model import TimedAutomaton, TimedState, tlts_step

BEYOND = -1  # integer-part marker for clocks above their maximal constant


@dataclass(frozen=True)
class Region:
    ints: tuple[int, ...]            # per clock: floor(v) or BEYOND
    zero_frac: tuple[bool, ...]      # per clock: frac(v) == 0 (meaningless when beyond)
    groups: tuple[tuple[int, ...], ...]  # non-beyond clocks with positive frac, by increasing frac

    @staticmethod
    def of(values: tuple[Fraction, ...], consts: tuple[int, ...]) -> "Region":
        ints = []
        zero = []
        fracs: dict[int, Fraction] = {}
        for idx, (v, k) in enumerate(zip(values, consts)):
            if v > k:
                ints.append(BEYOND)
                zero.append(False)
                continue
            ip = v.numerator // v.denominator
            f = v - ip
            ints.append(ip)
            zero.append(f == 0)
            if f > 0:
                fracs[idx] = f
        by_frac: dict[Fraction, list[int]] = {}
        for idx, f in fracs.items():
            by_frac.setdefault(f, []).append(idx)
        groups = tuple(tuple(sorted(by_frac[f])) for f in sorted(by_frac))
        return Region(tuple(ints), tuple(zero), groups)

    def representative(self, consts: tuple[int, ...]) -> tuple[Fraction, ...]:
        vals = []
        ngroups = len(self.groups)
        group_of = {}
        for gi, group in enumerate(self.groups):
            for idx in group:
                group_of[idx] = gi
        for idx, ip in enumerate(self.ints):
            if ip == BEYOND:
                vals.append(Fraction(consts[idx] + 1))
            elif self.zero_frac[idx]:
                vals.append(Fraction(ip))
            else:
                vals.append(ip + Fraction(group_of[idx] + 1, ngroups + 1))
        return tuple(vals)

    def time_successor(self, consts: tuple[int, ...]) -> "Region":
        """Region reached by the smallest delay that changes the region."""
        rep = self.representative(consts)
        fracs = [v - (v.numerator // v.denominator) for v in rep]
        live = [i for i, ip in enumerate(self.ints) if ip != BEYOND]
        pos = [fracs[i] for i in live if fracs[i] > 0]
        if pos:
            fmax = max(pos)
            has_zero = any(fracs[i] == 0 for i in live)
            d = (1 - fmax) / 2 if has_zero else 1 - fmax
        else:
            d = Fraction(1, 2)
        return Region.of(tuple(v + d for v in rep), consts)


def clock_max_constants(auto: TimedAutomaton) -> tuple[int, ...]:
    consts = []
    for x in auto.clocks:
        cs = [c.bound for e in auto.edges for c in e.guard if c.clock == x]
        cs += [c.bound for _, g in auto.invariants for c in g if c.clock == x]
        consts.append(max(cs, default=0))
    return tuple(consts)


@dataclass(frozen=True)
class RegionGraph:
    auto: TimedAutomaton
    consts: tuple[int, ...]
    states: tuple[tuple[str, Region], ...]
    initial: int
    action_edges: tuple[tuple[int, str, int], ...]
    delay_edges: tuple[tuple[int, int], ...]  # immediate-successor moves

    def size(self) -> int:
        return len(self.states)


def region_state_cap(auto: TimedAutomaton, consts: tuple[int, ...]) -> int:
    c = len(auto.clocks)
    m = max(consts, default=0)
    return len(auto.locations) * (2 * m + 2) ** c * math.factorial(c) * 2**c


def build_region_graph(auto: TimedAutomaton, start: TimedState) -> RegionGraph:
    consts = clock_max_constants(auto)
    init = (start.location, Region.of(start.values, consts))
    index: dict[tuple[str, Region], int] = {init: 0}
    states = [init]
    action_edges: list[tuple[int, str, int]] = []
    delay_edges: list[tuple[int, int]] = []
    cap = region_state_cap(auto, consts)
    todo = [0]
    while todo:
        sid = todo.pop(0)
        loc, region = states[sid]
        rep = region.representative(consts)
        rep_state = TimedState(loc, rep)
        for label in auto.actions:
            for nxt in tlts_step(auto, rep_state, label):
                key = (nxt.location, Region.of(nxt.values, consts))
                if key not in index:
                    index[key] = len(states)
                    states.append(key)
                    todo.append(index[key])
                action_edges.append((sid, label, index[key]))
        succ = region.time_successor(consts)
        if succ != region:
            rep_succ = succ.representative(consts)
            if auto.satisfies_invariant(loc, rep_succ):
                key = (loc, succ)
                if key not in index:
                    index[key] = len(states)
                    states.append(key)
                    todo.append(index[key])
                delay_edges.append((sid, index[key]))
        assert len(states) <= cap, "region construction exceeded the classical bound"
    return RegionGraph(
        auto, consts, tuple(states), 0, tuple(sorted(set(action_edges))),
        tuple(sorted(set(delay_edges)))
    )


# -- definitional relation checking -------------------------------------------


class _Arena:
    """Move tables for the disjoint union of two region graphs."""

    def __init__(self, g1: RegionGraph, g2: RegionGraph):
        self.offset = g1.size()
        self.n = g1.size() + g2.size()
        self.labels = sorted(set(g1.auto.actions) | set(g2.auto.actions))
        succ: dict[tuple[int, str], set[int]] = {}
        delay: dict[int, set[int]] = {i: set() for i in range(self.n)}
        for g, off in ((g1, 0), (g2, self.offset)):
            for u, a, v in g.action_edges:
                succ.setdefault((u + off, a), set()).add(v + off)
            for u, v in g.delay_edges:
                delay[u + off].add(v + off)
        self.act = {k: tuple(sorted(v)) for k, v in succ.items()}
        # Reflexive-transitive delay closure; chains are short so iterate.
        closure = [set([i]) for i in range(self.n)]
        changed = True
        while changed:
            changed = False
            for i in range(self.n):
                new = set()
                for j in closure[i]:
                    for t in delay[j]:
                        if t not in closure[i]:
                            new.add(t)
                if new:
                    closure[i] |= new
                    changed = True
        self.eps = [tuple(sorted(c)) for c in closure]
        self.act_after_eps = {
            (i, a): tuple(sorted({t for j in self.eps[i] for t in self.act.get((j, a), ())}))
            for i in range(self.n)
            for a in self.labels
        }
        self.obs = {
            (i, a): tuple(
                sorted({u for t in self.act_after_eps[(i, a)] for u in self.eps[t]})
            )
            for i in range(self.n)
            for a in self.labels
        }

    def initial_pair(self, g1: RegionGraph, g2: RegionGraph) -> tuple[int, int]:
        return (g1.initial, g2.initial + self.offset)


def _respondents(arena: _Arena, q: int, label: str, mode: str) -> tuple[int, ...]:
    if mode == "plain":
        return arena.act.get((q, label), ())
    if mode == "delayed":
        return arena.act_after_eps[(q, label)]
    return arena.obs[(q, label)]


def _simulation(arena: _Arena, mode: str) -> set[tuple[int, int]]:
    """Greatest relation where q answers p's actions per ``mode`` and delays freely."""
    rel = {(p, q) for p in range(arena.n) for q in range(arena.n)}
    changed = True
    while changed:
        changed = False
        dead = []
        for p, q in rel:
            ok = True
            for a in arena.labels:
                for p2 in arena.act.get((p, a), ()):
                    if not any((p2, q2) in rel for q2 in _respondents(arena, q, a, mode)):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                for p2 in arena.eps[p]:
                    if not any((p2, q2) in rel for q2 in arena.eps[q]):
                        ok = False
                        break
            if not ok:
                dead.append((p, q))
        if dead:
            rel -= set(dead)
            changed = True
    return rel


def _bisimulation(arena: _Arena, mode: str) -> set[tuple[int, int]]:
    rel = {(p, q) for p in range(arena.n) for q in range(arena.n)}
    changed = True
    while changed:
        changed = False
        dead = []
        for p, q in rel:
            ok = True
            for challenger, responder in ((p, q), (q, p)):
                for a in arena.labels:
                    for c2 in arena.act.get((challenger, a), ()):
                        replies = _respondents(arena, responder, a, mode)
                        if challenger is p:
                            if not any((c2, r2) in rel for r2 in replies):
                                ok = False
                                break
                        else:
                            if not any((r2, c2) in rel for r2 in replies):
                                ok = False
                                break
                    if not ok:
                        break
                if not ok:
                    break
                for c2 in arena.eps[challenger]:
                    replies = arena.eps[responder]
                    if challenger is p:
                        if not any((c2, r2) in rel for r2 in replies):
                            ok = False
                            break
                    else:
                        if not any((r2, c2) in rel for r2 in replies):
                            ok = False
                            break
                if not ok:
                    break
            if not ok:
                dead.append((p, q))
        if dead:
            rel -= set(dead)
            changed = True
    return rel


_MODES = {
    "ta-bisim": "plain",
    "ta-delay-bisim": "delayed",
    "ta-obs-bisim": "obs",
    "ta-sim-equiv": "plain",
    "ta-delay-sim-equiv": "delayed",
    "ta-obs-sim-equiv": "obs",
}


def oracle_check(relation: str, g1: RegionGraph, g2: RegionGraph) -> bool:
    """Definitional verdict for a time-abstracted relation on two region graphs."""
    if relation not in _MODES:
        raise ValueError(f"region oracle does not decide {relation!r}")
    arena = _Arena(g1, g2)
    pair = arena.initial_pair(g1, g2)
    if relation.endswith("sim-equiv"):
        rel = _simulation(arena, _MODES[relation])
        return pair in rel and (pair[1], pair[0]) in rel
    rel = _bisimulation(arena, _MODES[relation])
    return pair in rel


# -- sampling refuters ---------------------------------------------------------


def _delay_menu(auto_a: TimedAutomaton, auto_b: TimedAutomaton, granularity: Fraction):
    top = max(
        max(clock_max_constants(auto_a), default=0),
        max(clock_max_constants(auto_b), default=0),
    ) + 1
    steps = int(top / granularity)
    return tuple(granularity * i for i in range(1, steps + 1))


def refute_timed_bisim(
    auto_a: TimedAutomaton,
    start_a: TimedState,
    auto_b: TimedAutomaton,
    start_b: TimedState,
    granularity: Fraction,
    depth: int,
) -> list | None:
    """Bounded search for a trace separating the processes under exact-delay matching.

    Sound refuter: a returned trace is a genuine distinguishing strategy; None
    proves nothing.
    """
    labels = sorted(set(auto_a.actions) | set(auto_b.actions))
    delays = _delay_menu(auto_a, auto_b, Fraction(granularity))

    @lru_cache(maxsize=None)
    def distinguishable(sa: TimedState, sb: TimedState, d: int) -> tuple | None:
        if d == 0:
            return None
        for label in list(labels) + list(delays):
            succ_a = tlts_step(auto_a, sa, label)
            succ_b = tlts_step(auto_b, sb, label)
            if succ_a and not succ_b:
                return (("left", label),)
            if succ_b and not succ_a:
                return (("right", label),)
            for side, mine, theirs in (("left", succ_a, succ_b), ("right", succ_b, succ_a)):
                for s2 in mine:
                    answers = [
                        distinguishable(s2, t2, d - 1) if side == "left"
                        else distinguishable(t2, s2, d - 1)
                        for t2 in theirs
                    ]
                    if theirs and all(a is not None for a in answers):
                        longest = max(answers, key=len)
                        return (((side, label),) + longest)
        return None

    trace = distinguishable(start_a, start_b, depth)
    return list(trace) if trace is not None else None


def refute_timed_sim_equiv(
    auto_a: TimedAutomaton,
    start_a: TimedState,
    auto_b: TimedAutomaton,
    start_b: TimedState,
    granularity: Fraction,
    depth: int,
) -> list | None:
    """Bounded refuter for timed simulation equivalence (both orientations)."""
    labels = sorted(set(auto_a.actions) | set(auto_b.actions))
    delays = _delay_menu(auto_a, auto_b, Fraction(granularity))

    @lru_cache(maxsize=None)
    def not_simulated(s: TimedState, t: TimedState, autos: tuple, d: int) -> tuple | None:
        """Evidence that t (in autos[1]) cannot simulate s (in autos[0])."""
        if d == 0:
            return None
        auto_s, auto_t = autos
        for label in list(labels) + list(delays):
            succ_s = tlts_step(auto_s, s, label)
            succ_t = tlts_step(auto_t, t, label)
            if succ_s and not succ_t:
                return (label,)
            for s2 in succ_s:
                answers = [not_simulated(s2, t2, autos, d - 1) for t2 in succ_t]
                if all(a is not None for a in answers):
                    return ((label,) + max(answers, key=len))
        return None

    left = not_simulated(start_a, start_b, (auto_a, auto_b), depth)
    if left is not None:
        return [("left", lab) for lab in left]
    right = not_simulated(start_b, start_a, (auto_b, auto_a), depth)
    if right is not None:
        return [("right", lab) for lab in right]
    return None
