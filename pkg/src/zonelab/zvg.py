"""Zone valuation graphs: construction, quotients, spans, exports.

Construction runs in two phases.  Phase one explores the reachable zones
forward (with location-dependent maximal-constants widening so the graph is
finite), splits them by the canonical decomposition of each location's
invariant and outgoing guards, and then refines backwards until every cell
has, per label, successors inside single cells.  Phase two merges cells that
are strongly bisimilar (variant ``Z``) or simulation equivalent (variant
``Zsim``), treating the delay pseudo-action as a visible label.

Delay edges are reflexive and transitively closed by construction; the stored
graph answers closure queries and exports a reduced edge set for display.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

from .model import TimedAutomaton, TimedState
from .spans import SpanValue, max_from_upper, min_from_lower
from .zones import Bound, Zone, canonical_decomposition

EPSILON = "ε"

_STABILIZE_CAP = 100_000


@dataclass(frozen=True)
class ZvgNode:
    nid: int
    locations: frozenset[str]
    cells: tuple[tuple[str, Zone], ...]
    span: SpanValue
    ranges: tuple[tuple[str, SpanValue], ...]
    maxima: tuple[tuple[str, SpanValue], ...]
    critical: tuple[str, ...]

    def zone_text(self) -> str:
        parts = [f"{loc}:{zone.text()}" for loc, zone in self.cells]
        return " | ".join(parts)

    def range_of(self, clock: str) -> SpanValue:
        return dict(self.ranges)[clock]

    def max_of(self, clock: str) -> SpanValue:
        return dict(self.maxima)[clock]


@dataclass(frozen=True)
class ZoneGraph:
    variant: str
    clocks: tuple[str, ...]
    nodes: tuple[ZvgNode, ...]
    initial: int
    action_edges: tuple[tuple[int, str, int], ...]
    eps_closure: tuple[frozenset[int], ...]
    source_blocks: tuple[frozenset[int], ...] | None = None

    @cached_property
    def _succ(self) -> tuple[dict[str, tuple[int, ...]], ...]:
        table: list[dict[str, list[int]]] = [dict() for _ in self.nodes]
        for u, a, v in self.action_edges:
            table[u].setdefault(a, []).append(v)
        return tuple(
            {a: tuple(sorted(vs)) for a, vs in row.items()} for row in table
        )

    def action_succ(self, nid: int) -> Mapping[str, tuple[int, ...]]:
        return self._succ[nid]

    def eps_set(self, nid: int) -> frozenset[int]:
        return self.eps_closure[nid]

    def labels(self, nid: int) -> tuple[str, ...]:
        return tuple(sorted(self._succ[nid].keys()))

    def node_containing(self, state: TimedState) -> int:
        for node in self.nodes:
            if state.location in node.locations:
                for loc, zone in node.cells:
                    if loc == state.location and zone.contains(state.values):
                        return node.nid
        raise ValueError(f"no node contains ({state.location}, {state.values})")

    def eps_reduced_edges(self) -> tuple[tuple[int, int], ...]:
        """Delay edges with self-loops and transitively implied edges removed."""
        out = []
        for u in range(len(self.nodes)):
            direct = sorted(self.eps_closure[u] - {u})
            for v in direct:
                implied = any(
                    w != u and w != v and v in self.eps_closure[w] for w in direct
                )
                if not implied:
                    out.append((u, v))
        return tuple(out)


# -- maximal constants ---------------------------------------------------------


def max_constants(auto: TimedAutomaton) -> dict[tuple[str, str], int]:
    """Per-location, per-clock maximal constants by backward propagation.

    A clock's constant at a location is the largest bound it is compared
    against on any path before the clock is reset.
    """
    consts = {(l, x): 0 for l in auto.locations for x in auto.clocks}
    for loc, guard in auto.invariants:
        for c in guard:
            key = (loc, c.clock)
            consts[key] = max(consts[key], c.bound)
    for e in auto.edges:
        for c in e.guard:
            key = (e.source, c.clock)
            consts[key] = max(consts[key], c.bound)
    changed = True
    while changed:
        changed = False
        for e in auto.edges:
            for x in auto.clocks:
                if x in e.resets:
                    continue
                src, dst = (e.source, x), (e.target, x)
                if consts[dst] > consts[src]:
                    consts[src] = consts[dst]
                    changed = True
    return consts


# -- phase one -----------------------------------------------------------------


def _region_zone(
    clocks: tuple[str, ...], values: tuple[Fraction, ...], consts: Mapping[str, int]
) -> Zone:
    """The start valuation's region (w.r.t. the location's constants) as a zone."""
    zone = Zone.universal(clocks)
    rows = [list(r) for r in zone.rows]
    info = []
    for i, x in enumerate(clocks):
        v, k = values[i], consts[x]
        if v > k:
            rows[0][i + 1] = Bound(-k, True)
            info.append(None)
            continue
        ip = v.numerator // v.denominator
        frac = v - ip
        if frac == 0:
            rows[i + 1][0] = Bound(ip, False)
            rows[0][i + 1] = Bound(-ip, False)
        else:
            rows[i + 1][0] = Bound(ip + 1, True)
            rows[0][i + 1] = Bound(-ip, True)
        info.append((ip, frac))
    for i in range(len(clocks)):
        for j in range(len(clocks)):
            if i >= j or info[i] is None or info[j] is None:
                continue
            (ipi, fi), (ipj, fj) = info[i], info[j]
            d = ipi - ipj
            if fi == fj:
                rows[i + 1][j + 1] = Bound(d, False)
                rows[j + 1][i + 1] = Bound(-d, False)
            elif fi < fj:
                rows[i + 1][j + 1] = Bound(d, True)
                rows[j + 1][i + 1] = Bound(1 - d, True)
            else:
                rows[i + 1][j + 1] = Bound(d + 1, True)
                rows[j + 1][i + 1] = Bound(-d, True)
    return Zone(clocks, tuple(tuple(r) for r in rows)).canonical()


def _explore(auto: TimedAutomaton, start: TimedState, kloc, inv_zone):
    """Forward zone exploration; returns disjoint convex coverage per location."""
    seed = _region_zone(auto.clocks, start.values, kloc[start.location])
    seed = (
        seed.delay_closure()
        .intersect(inv_zone[start.location])
        .extrapolate(kloc[start.location])
    )
    coverage: dict[str, list[Zone]] = {l: [] for l in auto.locations}
    worklist: list[tuple[str, Zone]] = [(start.location, seed)]
    out_edges = {l: [e for e in auto.edges if e.source == l] for l in auto.locations}
    while worklist:
        loc, zone = worklist.pop(0)
        pieces = [zone]
        for cell in coverage[loc]:
            nxt: list[Zone] = []
            for p in pieces:
                nxt.extend(p.subtract(cell))
            pieces = nxt
            if not pieces:
                break
        for piece in pieces:
            coverage[loc].append(piece)
            for e in out_edges[loc]:
                fired = piece.intersect_guard(e.guard)
                if fired.is_empty:
                    continue
                landed = fired.reset(e.resets).intersect(inv_zone[e.target])
                if landed.is_empty:
                    continue
                succ = (
                    landed.delay_closure()
                    .intersect(inv_zone[e.target])
                    .extrapolate(kloc[e.target])
                )
                worklist.append((e.target, succ))
    return coverage


def _split_location(cells, loc, predicate: Zone):
    """Split every cell of ``loc`` into its parts inside/outside ``predicate``."""
    out = []
    changed = False
    for l, z in cells:
        if l != loc:
            out.append((l, z))
            continue
        inside = z.intersect(predicate)
        if inside.is_empty or inside.rows == z.rows:
            out.append((l, z))
            continue
        changed = True
        out.append((l, inside))
        out.extend((l, piece) for piece in z.subtract(inside))
    return out, changed


def _stabilize(auto: TimedAutomaton, cells, inv_zone):
    guard_zone = {
        e: Zone.from_guard(auto.clocks, e.guard) for e in auto.edges
    }
    in_edges = {l: [e for e in auto.edges if e.target == l] for l in auto.locations}
    rounds = 0
    while True:
        rounds += 1
        assert rounds < _STABILIZE_CAP, "cell refinement failed to terminate"
        changed = False
        for tloc, tzone in list(cells):
            pred = tzone.past_closure()
            cells, did = _split_location(cells, tloc, pred)
            changed |= did
            for e in in_edges[tloc]:
                pre = guard_zone[e].intersect(tzone.reset_preimage(e.resets))
                if pre.is_empty:
                    continue
                cells, did = _split_location(cells, e.source, pre)
                changed |= did
        if not changed:
            return cells


def _span_data(clocks: Sequence[str], zones: Sequence[Zone]):
    ranges = []
    maxima = []
    for x in clocks:
        lo = min((min_from_lower(z.lower_bound(x)) for z in zones), key=SpanValue.key)
        hi = max((max_from_upper(z.upper_bound(x)) for z in zones), key=SpanValue.key)
        rng = hi - lo if not hi.is_infinite else SpanValue.infinite()
        ranges.append((x, rng))
        maxima.append((x, hi))
    span = min((r for _, r in ranges), key=SpanValue.key)
    critical = tuple(x for x, r in ranges if r == span)
    return span, tuple(ranges), tuple(maxima), critical


def _make_node(nid: int, cells: Sequence[tuple[str, Zone]], clocks) -> ZvgNode:
    span, ranges, maxima, critical = _span_data(clocks, [z for _, z in cells])
    return ZvgNode(
        nid=nid,
        locations=frozenset(l for l, _ in cells),
        cells=tuple(cells),
        span=span,
        ranges=ranges,
        maxima=maxima,
        critical=critical,
    )


def build_phase1(auto: TimedAutomaton, start: TimedState) -> ZoneGraph:
    kmap = max_constants(auto)
    kloc = {l: {x: kmap[(l, x)] for x in auto.clocks} for l in auto.locations}
    inv_zone = {l: Zone.from_guard(auto.clocks, auto.invariant(l)) for l in auto.locations}
    coverage = _explore(auto, start, kloc, inv_zone)

    cells: list[tuple[str, Zone]] = []
    for loc in auto.locations:
        atoms = list(auto.invariant(loc))
        for e in auto.edges:
            if e.source == loc:
                atoms.extend(e.guard)
        for zone in coverage[loc]:
            for cell in canonical_decomposition(zone, atoms):
                cells.append((loc, cell))

    cells = _stabilize(auto, cells, inv_zone)
    loc_order = {l: i for i, l in enumerate(auto.locations)}
    cells.sort(key=lambda lz: (loc_order[lz[0]], _zone_key(lz[1])))

    nodes = tuple(_make_node(i, [lz], auto.clocks) for i, lz in enumerate(cells))
    guard_zone = {e: Zone.from_guard(auto.clocks, e.guard) for e in auto.edges}

    action_edges = set()
    for i, (loc, zone) in enumerate(cells):
        for e in auto.edges:
            if e.source != loc:
                continue
            gz = guard_zone[e]
            if not gz.includes(zone):
                assert not gz.intersects(zone), "guard not uniform on a stabilized cell"
                continue
            image = zone.reset(e.resets).intersect(inv_zone[e.target])
            if image.is_empty:
                continue
            targets = [
                j
                for j, (l2, z2) in enumerate(cells)
                if l2 == e.target and z2.intersects(image)
            ]
            assert len(targets) == 1, "action image not confined to one cell"
            action_edges.add((i, e.action, targets[0]))

    eps_direct = [set([i]) for i in range(len(cells))]
    for i, (loc, zone) in enumerate(cells):
        future = zone.delay_closure()
        for j, (loc2, zone2) in enumerate(cells):
            if i != j and loc2 == loc and future.intersects(zone2):
                eps_direct[i].add(j)
    closure = _transitive_closure(eps_direct)

    init = None
    for i, (loc, zone) in enumerate(cells):
        if loc == start.location and zone.contains(start.values):
            assert init is None, "start valuation in two cells"
            init = i
    assert init is not None, "start valuation not covered"

    return ZoneGraph(
        variant="Z1",
        clocks=auto.clocks,
        nodes=nodes,
        initial=init,
        action_edges=tuple(sorted(action_edges)),
        eps_closure=tuple(frozenset(s) for s in closure),
    )


def _zone_key(zone: Zone):
    return tuple(tuple(b.key() for b in row) for row in zone.rows)


def _transitive_closure(direct: list[set[int]]) -> list[set[int]]:
    closure = [set(s) for s in direct]
    changed = True
    while changed:
        changed = False
        for i in range(len(closure)):
            extra = set()
            for j in closure[i]:
                extra |= closure[j] - closure[i]
            if extra:
                closure[i] |= extra
                changed = True
    return closure


# -- phase two: quotients --------------------------------------------------------


def _move_table(graph: ZoneGraph) -> list[dict[str, frozenset[int]]]:
    table = []
    for node in graph.nodes:
        moves = {a: frozenset(ts) for a, ts in graph.action_succ(node.nid).items()}
        moves[EPSILON] = frozenset(graph.eps_set(node.nid))
        table.append(moves)
    return table


def bisimilarity_blocks(graph: ZoneGraph) -> list[frozenset[int]]:
    """Coarsest strong-bisimulation partition with the delay label visible."""
    moves = _move_table(graph)
    n = len(graph.nodes)
    block = [0] * n
    while True:
        sigs = {}
        new_block = [0] * n
        for u in range(n):
            sig = (
                block[u],
                tuple(
                    sorted(
                        (a, tuple(sorted({block[t] for t in ts})))
                        for a, ts in moves[u].items()
                    )
                ),
            )
            if sig not in sigs:
                sigs[sig] = len(sigs)
            new_block[u] = sigs[sig]
        if new_block == block:
            break
        block = new_block
    groups: dict[int, list[int]] = {}
    for u, b in enumerate(block):
        groups.setdefault(b, []).append(u)
    return [frozenset(g) for g in sorted(groups.values(), key=min)]


def similarity_blocks(graph: ZoneGraph) -> list[frozenset[int]]:
    """Mutual-similarity partition (delay label visible)."""
    moves = _move_table(graph)
    n = len(graph.nodes)
    sim = [[True] * n for _ in range(n)]
    changed = True
    while changed:
        changed = False
        for u in range(n):
            for v in range(n):
                if not sim[u][v]:
                    continue
                ok = True
                for a, targets in moves[u].items():
                    answers = moves[v].get(a, frozenset())
                    for t in targets:
                        if not any(sim[t][t2] for t2 in answers):
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    sim[u][v] = False
                    changed = True
    assigned = {}
    blocks: list[list[int]] = []
    for u in range(n):
        for rep, members in assigned.items():
            if sim[u][rep] and sim[rep][u]:
                members.append(u)
                break
        else:
            assigned[u] = [u]
            blocks.append(assigned[u])
    return [frozenset(b) for b in sorted(blocks, key=min)]


def _quotient(z1: ZoneGraph, blocks: list[frozenset[int]], variant: str) -> ZoneGraph:
    bid = {}
    for i, block in enumerate(blocks):
        for u in block:
            bid[u] = i
    nodes = []
    for i, block in enumerate(blocks):
        cells: list[tuple[str, Zone]] = []
        for u in sorted(block):
            cells.extend(z1.nodes[u].cells)
        nodes.append(_make_node(i, cells, z1.clocks))
    action_edges = sorted({(bid[u], a, bid[v]) for u, a, v in z1.action_edges})
    direct = [set([i]) for i in range(len(blocks))]
    for u in range(len(z1.nodes)):
        for v in z1.eps_closure[u]:
            direct[bid[u]].add(bid[v])
    closure = _transitive_closure(direct)
    return ZoneGraph(
        variant=variant,
        clocks=z1.clocks,
        nodes=tuple(nodes),
        initial=bid[z1.initial],
        action_edges=tuple(action_edges),
        eps_closure=tuple(frozenset(s) for s in closure),
        source_blocks=tuple(blocks),
    )


def merge_bisimilar(z1: ZoneGraph) -> ZoneGraph:
    assert z1.variant == "Z1"
    return _quotient(z1, bisimilarity_blocks(z1), "Z")


def merge_sim_equivalent(z1: ZoneGraph) -> ZoneGraph:
    assert z1.variant == "Z1"
    return _quotient(z1, similarity_blocks(z1), "Zsim")


def build_graph(auto: TimedAutomaton, start: TimedState, variant: str) -> ZoneGraph:
    z1 = build_phase1(auto, start)
    if variant == "Z1":
        return z1
    if variant == "Z":
        return merge_bisimilar(z1)
    if variant == "Zsim":
        return merge_sim_equivalent(z1)
    raise ValueError(f"unknown graph variant {variant!r}")


# -- span queries ------------------------------------------------------------------


def max_admissible_delay(graph: ZoneGraph, nid: int, state: TimedState) -> SpanValue:
    """Residual delay available to ``state`` inside its node, on a critical clock."""
    node = graph.nodes[nid]
    member = any(
        loc == state.location and zone.contains(state.values) for loc, zone in node.cells
    )
    if not member:
        raise ValueError("state is not contained in the node")
    if node.span.is_infinite:
        return SpanValue.infinite()
    values = state.valuation(graph.clocks)
    best = None
    for x in node.critical:
        residual = node.max_of(x) - values[x]
        if best is None or residual < best:
            best = residual
    return best


# -- exports ------------------------------------------------------------------------


def to_dot(graph: ZoneGraph) -> str:
    lines = [f'digraph "{graph.variant}" {{', "  rankdir=LR;"]
    for node in graph.nodes:
        locs = ",".join(sorted(node.locations))
        label = f"{{{locs}}} {node.zone_text()} ({node.span.text()})"
        shape = "doublecircle" if node.nid == graph.initial else "ellipse"
        lines.append(f'  n{node.nid} [shape={shape} label="{label}"];')
    for u, a, v in graph.action_edges:
        lines.append(f'  n{u} -> n{v} [label="{a}"];')
    for u, v in graph.eps_reduced_edges():
        lines.append(f'  n{u} -> n{v} [label="{EPSILON}" style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_json_dict(graph: ZoneGraph) -> dict:
    return {
        "variant": graph.variant,
        "clocks": list(graph.clocks),
        "initial": graph.initial,
        "nodes": [
            {
                "id": node.nid,
                "locations": sorted(node.locations),
                "zones": [f"{loc}: {zone.text()}" for loc, zone in node.cells],
                "span": node.span.json_value(),
                "ranges": {x: r.json_value() for x, r in node.ranges},
                "critical": list(node.critical),
            }
            for node in graph.nodes
        ],
        "edges": (
            [[u, a, v] for u, a, v in graph.action_edges]
            + [[u, EPSILON, v] for u, v in graph.eps_reduced_edges()]
        ),
    }
