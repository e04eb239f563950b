"""The subtour-cover solver: split graph, witness flows, rounding, map-back.

Given a vertebrate pair and an Eulerian edge set H away from the backbone,
this produces an Eulerian multiset F that enters and leaves every component
of (V minus the backbone, H), such that any component of F crossing a
non-singleton family set reaches the backbone.  The route: lift the LP
circulation into a two-level split graph guided by a minimal witness flow,
reroute half a unit through an auxiliary vertex per component, round to an
integral circulation by exact min-cost flow, and map back, restoring
Eulerian degrees with a path inside each component.

Global cost is at most twice the LP value plus the outside singleton mass;
each backbone-free component costs at most three times its own singleton
mass.  Both bounds, and every intermediate property, are asserted exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import simplex
from .checks import Checker
from .errors import InternalCheckError
from .flows import CirculationProblem
from .graph import Digraph, EdgeMultiset, bfs_path, scc_topological, undirected_components
from .instance import path_crossings
from .pair import VertebratePair

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)

FORWARD = "forward"
BACKWARD = "backward"
NEUTRAL = "neutral"

SUBTOUR_COVER_ALPHA = Fraction(3)
SUBTOUR_COVER_KAPPA = Fraction(2)
SUBTOUR_COVER_BETA = Fraction(1)


@dataclass
class SubtourCoverInstance:
    pair: VertebratePair
    h: EdgeMultiset

    def validate(self, checker: Optional[Checker] = None) -> None:
        checker = checker or Checker()
        g = self.pair.instance.g
        outside = self.pair.outside_vertices()
        for eid in self.h.mult:
            e = g.edge(eid)
            checker.check(e.tail in outside and e.head in outside,
                          "h-avoids-backbone", lambda: f"edge {eid}")
        indeg, outdeg = self.h.degrees(g)
        for v in set(indeg) | set(outdeg):
            checker.check(indeg.get(v, 0) == outdeg.get(v, 0), "h-eulerian",
                          lambda: f"vertex {v}")
        for s in self.pair.instance.family.nonsingletons():
            checker.check(self.h.crossing(g, s) == 0, "h-avoids-family-cuts",
                          lambda: sorted(s))

    def components(self) -> list[frozenset]:
        """W_1..W_k: components of (V minus backbone, H), smallest vertex first."""
        g = self.pair.instance.g
        outside = sorted(self.pair.outside_vertices())
        parent = {v: v for v in outside}

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for eid in self.h.mult:
            e = g.edge(eid)
            ra, rb = find(e.tail), find(e.head)
            if ra != rb:
                parent[rb] = ra
        groups: dict[int, set[int]] = {}
        for v in outside:
            groups.setdefault(find(v), set()).add(v)
        return sorted((frozenset(s) for s in groups.values()), key=min)


def classify_edge(r_tail: int, r_head: int) -> str:
    if r_tail < r_head:
        return FORWARD
    if r_tail > r_head:
        return BACKWARD
    return NEUTRAL


@dataclass
class LevelStructure:
    """Numbering of the non-singleton family sets plus V by non-increasing
    size; r(v) is the highest-numbered set containing v, and an edge is
    forward/backward/neutral according to the r of its endpoints."""

    order: list[frozenset]
    r: list[int]
    edge_class: list[str]


def build_level_structure(pair: VertebratePair) -> LevelStructure:
    inst = pair.instance
    sets = [inst.ground] + inst.family.nonsingletons()
    sets.sort(key=lambda s: (-len(s), sorted(s)))
    r = [0] * inst.g.n
    for idx, s in enumerate(sets, start=1):
        for v in s:
            r[v] = idx  # later (smaller) sets overwrite: r(v) = max index
    classes = [classify_edge(r[e.tail], r[e.head]) for e in inst.g.edges]
    return LevelStructure(sets, r, classes)


@dataclass
class SplitGraph:
    """Two-level copy of a digraph: forward edges live on the lower level,
    backward edges on the upper, neutral on both; every vertex has a free
    down edge and backbone vertices also a free up edge."""

    g: Digraph
    base: Digraph
    kind: list[tuple]  # per split eid: ("lower"|"upper", base_eid) | ("down"|"up", v)
    lower_of: dict[int, int]
    upper_of: dict[int, int]
    down_of: dict[int, int]
    up_of: dict[int, int]

    @staticmethod
    def lower(v: int) -> int:
        return 2 * v

    @staticmethod
    def upper(v: int) -> int:
        return 2 * v + 1

    def level_set(self, base_vertices) -> frozenset:
        return frozenset(
            x for v in base_vertices for x in (self.lower(v), self.upper(v))
        )


def build_split_graph(base: Digraph, edge_class: list[str],
                      backbone_vertices: frozenset) -> SplitGraph:
    edges: list[tuple[int, int, Fraction]] = []
    kind: list[tuple] = []
    lower_of: dict[int, int] = {}
    upper_of: dict[int, int] = {}
    down_of: dict[int, int] = {}
    up_of: dict[int, int] = {}

    def push(tail: int, head: int, cost: Fraction, tag: tuple) -> int:
        edges.append((tail, head, cost))
        kind.append(tag)
        return len(edges) - 1

    for v in range(base.n):
        down_of[v] = push(SplitGraph.upper(v), SplitGraph.lower(v), ZERO, ("down", v))
        if v in backbone_vertices:
            up_of[v] = push(SplitGraph.lower(v), SplitGraph.upper(v), ZERO, ("up", v))
    for e in base.edges:
        cls = edge_class[e.eid]
        if cls in (FORWARD, NEUTRAL):
            lower_of[e.eid] = push(SplitGraph.lower(e.tail), SplitGraph.lower(e.head),
                                   e.cost, ("lower", e.eid))
        if cls in (BACKWARD, NEUTRAL):
            upper_of[e.eid] = push(SplitGraph.upper(e.tail), SplitGraph.upper(e.head),
                                   e.cost, ("upper", e.eid))
    return SplitGraph(Digraph(2 * base.n, edges), base, kind,
                      lower_of, upper_of, down_of, up_of)


@dataclass
class WitnessFlow:
    """Sub-flow of x certifying the circulation lifts into the split graph:
    zero on backward edges, full on forward, within [0, x] on neutral, with
    nonnegative excess away from the backbone; chosen with minimal total
    component-boundary mass, then minimal total flow (hence acyclic)."""

    f: list[Fraction]
    boundary_optimum: Fraction


def _witness_lp(g: Digraph, x: list[Fraction], edge_class: list[str],
                outside: frozenset, objective: dict[int, Fraction],
                upper: dict[int, Fraction]) -> Optional[dict[int, Fraction]]:
    """Minimize a linear objective over witness flows; neutral edges are the
    variables, with per-vertex excess rows only for non-backbone vertices."""
    neutral = [e.eid for e in g.edges if edge_class[e.eid] == NEUTRAL]
    col = {eid: j for j, eid in enumerate(neutral)}
    fixed_excess = [ZERO] * g.n
    for e in g.edges:
        if edge_class[e.eid] == FORWARD:
            fixed_excess[e.tail] += x[e.eid]
            fixed_excess[e.head] -= x[e.eid]
    rows, senses, rhs = [], [], []
    for v in sorted(outside):
        row: dict[int, Fraction] = {}
        for eid in g.out_edges[v]:
            if eid in col:
                row[col[eid]] = row.get(col[eid], ZERO) + ONE
        for eid in g.in_edges[v]:
            if eid in col:
                row[col[eid]] = row.get(col[eid], ZERO) - ONE
        rows.append(row)
        senses.append(">=")
        rhs.append(-fixed_excess[v])
    cost = [objective.get(eid, ZERO) for eid in neutral]
    ub = [upper[eid] for eid in neutral]
    res = simplex.solve_lp(cost, rows, senses, rhs, upper=ub)
    if res.status != simplex.OPTIMAL:
        return None
    return {eid: res.x[col[eid]] for eid in neutral}


def compute_witness_flow(cover: SubtourCoverInstance, levels: LevelStructure,
                         checker: Optional[Checker] = None) -> WitnessFlow:
    """Two-stage exact LP: first minimize the flow crossing the component
    boundaries, then minimize total flow below the first optimum.  The
    result is re-checked against every defining property, including
    acyclicity of the support."""
    checker = checker or Checker()
    inst = cover.pair.instance
    g = inst.g
    x = list(inst.x)
    outside = cover.pair.outside_vertices()
    comps = cover.components()
    cross_count: dict[int, Fraction] = {}
    fixed_boundary = ZERO
    for e in g.edges:
        crossings = sum(1 for w in comps if (e.tail in w) != (e.head in w))
        if not crossings:
            continue
        if levels.edge_class[e.eid] == NEUTRAL:
            cross_count[e.eid] = Fraction(crossings)
        elif levels.edge_class[e.eid] == FORWARD:
            fixed_boundary += crossings * x[e.eid]
    upper = {e.eid: x[e.eid] for e in g.edges if levels.edge_class[e.eid] == NEUTRAL}
    stage1 = _witness_lp(g, x, levels.edge_class, outside, cross_count, upper)
    if stage1 is None:
        raise InternalCheckError("witness-flow-feasible",
                                 "stage-1 witness LP infeasible")
    boundary_opt = fixed_boundary + sum(
        (cross_count.get(eid, ZERO) * val for eid, val in stage1.items()), ZERO
    )
    stage2 = _witness_lp(g, x, levels.edge_class, outside,
                         {eid: ONE for eid in stage1}, dict(stage1))
    if stage2 is None:
        raise InternalCheckError("witness-flow-stage2", "stage-2 LP infeasible")
    f = [ZERO] * g.m
    for e in g.edges:
        if levels.edge_class[e.eid] == FORWARD:
            f[e.eid] = x[e.eid]
        elif levels.edge_class[e.eid] == NEUTRAL:
            f[e.eid] = stage2[e.eid]
    witness = WitnessFlow(f, boundary_opt)
    validate_witness_flow(cover, levels, witness, checker)
    return witness


def validate_witness_flow(cover: SubtourCoverInstance, levels: LevelStructure,
                          witness: WitnessFlow,
                          checker: Optional[Checker] = None) -> None:
    checker = checker or Checker()
    inst = cover.pair.instance
    g = inst.g
    f = witness.f
    outside = cover.pair.outside_vertices()
    for e in g.edges:
        cls = levels.edge_class[e.eid]
        if cls == BACKWARD:
            checker.check(f[e.eid] == 0, "witness-zero-on-backward",
                          lambda: f"edge {e.eid}")
        elif cls == FORWARD:
            checker.check(f[e.eid] == inst.x[e.eid], "witness-full-on-forward",
                          lambda: f"edge {e.eid}")
        else:
            checker.check(ZERO <= f[e.eid] <= inst.x[e.eid],
                          "witness-bounded-on-neutral", lambda: f"edge {e.eid}")
    for v in sorted(outside):
        excess = sum((f[eid] for eid in g.out_edges[v]), ZERO) - sum(
            (f[eid] for eid in g.in_edges[v]), ZERO
        )
        checker.check(excess >= 0, "witness-nonnegative-excess",
                      lambda: f"vertex {v}")
    support = [e.eid for e in g.edges if f[e.eid] > 0]
    checker.check(_support_acyclic(g, support), "witness-support-acyclic")
    boundary = witness_boundary_mass(cover, witness.f)
    checker.check(boundary == witness.boundary_optimum, "witness-boundary-minimal",
                  lambda: f"{boundary} != {witness.boundary_optimum}")


def witness_boundary_mass(cover: SubtourCoverInstance, f: list[Fraction]) -> Fraction:
    """sum over components W_i of f(delta(W_i))."""
    g = cover.pair.instance.g
    total = ZERO
    for w in cover.components():
        for e in g.edges:
            if (e.tail in w) != (e.head in w):
                total += f[e.eid]
    return total


def _support_acyclic(g: Digraph, support: list[int]) -> bool:
    adj: dict[int, list[int]] = {}
    for eid in support:
        e = g.edge(eid)
        adj.setdefault(e.tail, []).append(e.head)
    color: dict[int, int] = {}

    def dfs(v: int) -> bool:
        color[v] = 1
        for w in adj.get(v, ()):  # 1 = on stack, 2 = done
            c = color.get(w, 0)
            if c == 1:
                return False
            if c == 0 and not dfs(w):
                return False
        color[v] = 2
        return True

    return all(color.get(v, 0) != 0 or dfs(v) for v in list(adj))


@dataclass
class AugmentedGraph:
    """The instance graph plus one auxiliary vertex per component, carrying
    copies of the edges entering/leaving the first residual SCC of that
    component; copies of copies arise when components interface directly."""

    g: Digraph
    base: Digraph
    w_sets: list[frozenset]
    w_hat: list[frozenset]
    aux_of: list[int]
    base_eid: list[int]
    in_copy: dict[tuple[int, int], int]
    out_copy: dict[tuple[int, int], int]
    r: list[int]
    edge_class: list[str]

    @property
    def k(self) -> int:
        return len(self.w_sets)

    def aux_index(self, vertex: int) -> Optional[int]:
        if vertex >= self.base.n:
            return vertex - self.base.n
        return None


def build_augmented_graph(cover: SubtourCoverInstance, witness: WitnessFlow,
                          levels: LevelStructure,
                          checker: Optional[Checker] = None) -> AugmentedGraph:
    checker = checker or Checker()
    inst = cover.pair.instance
    g = inst.g
    x = inst.x
    f = witness.f
    comps = cover.components()
    # residual graph of f with capacities x, per component
    residual_adj: dict[int, list[int]] = {v: [] for v in range(g.n)}
    for e in g.edges:
        if f[e.eid] < x[e.eid]:
            residual_adj[e.tail].append(e.head)
        if f[e.eid] > 0:
            residual_adj[e.head].append(e.tail)

    def first_residual_scc(w: frozenset) -> frozenset:
        res_edges = []
        for v in sorted(w):
            for u in residual_adj[v]:
                if u in w:
                    res_edges.append((v, u, ZERO))
        sub = Digraph(g.n, res_edges)
        return scc_topological(sub, w)[0]

    w_hat = []
    for w in comps:
        hat = first_residual_scc(w)
        incoming = [
            (v, u) for v in w - hat for u in residual_adj[v] if u in hat
        ]
        checker.check(not incoming, "first-scc-source-in-residual",
                      lambda: f"W={sorted(w)} hat={sorted(hat)}")
        w_hat.append(hat)

    edges: list[tuple[int, int, Fraction]] = [(e.tail, e.head, e.cost) for e in g.edges]
    base_eid: list[int] = list(range(g.m))
    r_aug: list[int] = list(levels.r)
    in_copy: dict[tuple[int, int], int] = {}
    out_copy: dict[tuple[int, int], int] = {}
    aux_of: list[int] = []
    for i, hat in enumerate(w_hat):
        a = g.n + i
        aux_of.append(a)
        levels_in_w = {levels.r[v] for v in comps[i]}
        checker.check(len(levels_in_w) == 1, "component-level-consistent",
                      lambda: sorted(comps[i]))
        r_aug.append(levels_in_w.pop())
        snapshot = len(edges)
        for eid in range(snapshot):
            tail, head, cost = edges[eid]
            if head in hat and tail not in hat:
                edges.append((tail, a, cost))
                base_eid.append(base_eid[eid])
                in_copy[(eid, i)] = len(edges) - 1
            elif tail in hat and head not in hat:
                edges.append((a, head, cost))
                base_eid.append(base_eid[eid])
                out_copy[(eid, i)] = len(edges) - 1
    aug_g = Digraph(g.n + len(comps), edges)
    edge_class = [classify_edge(r_aug[e.tail], r_aug[e.head])
                  for e in aug_g.edges]
    for eid in range(aug_g.m):
        checker.check(edge_class[eid] == levels.edge_class[base_eid[eid]],
                      "copy-edge-class-preserved", lambda: f"edge {eid}")
    return AugmentedGraph(aug_g, g, comps, w_hat, aux_of, base_eid,
                          in_copy, out_copy, r_aug, edge_class)


def lift_to_split(split: SplitGraph, x_vec: list[Fraction], f_vec: list[Fraction],
                  backbone_vertices: frozenset) -> dict[int, Fraction]:
    """Embed a circulation with witness flow into the split graph: witness
    mass on the lower level, the rest above, with the free vertical edges
    balancing each vertex pair."""
    base = split.base
    z: dict[int, Fraction] = {eid: ZERO for eid in range(split.g.m)}
    for e in base.edges:
        lo = split.lower_of.get(e.eid)
        up = split.upper_of.get(e.eid)
        if lo is not None:
            z[lo] = f_vec[e.eid]
        if up is not None:
            z[up] = x_vec[e.eid] - f_vec[e.eid]
    for v in range(base.n):
        f_in = sum((f_vec[eid] for eid in base.in_edges[v]), ZERO)
        f_out = sum((f_vec[eid] for eid in base.out_edges[v]), ZERO)
        z[split.down_of[v]] = max(ZERO, f_out - f_in)
        if v in split.up_of:
            z[split.up_of[v]] = max(ZERO, f_in - f_out)
    return z


def project_from_split(split: SplitGraph, z: dict[int, Fraction]
                       ) -> tuple[list[Fraction], list[Fraction]]:
    """The projection pi: per base edge, x' = z(lower) + z(upper) and
    f' = z(lower)."""
    base = split.base
    x_vec = [ZERO] * base.m
    f_vec = [ZERO] * base.m
    for eid in range(base.m):
        lo = split.lower_of.get(eid)
        up = split.upper_of.get(eid)
        if lo is not None:
            x_vec[eid] += z[lo]
            f_vec[eid] += z[lo]
        if up is not None:
            x_vec[eid] += z[up]
    return x_vec, f_vec


def is_split_circulation(split: SplitGraph, z: dict[int, Fraction]) -> bool:
    for v in range(split.g.n):
        balance = sum((z[eid] for eid in split.g.in_edges[v]), ZERO) - sum(
            (z[eid] for eid in split.g.out_edges[v]), ZERO
        )
        if balance:
            return False
    return True


def split_cost(split: SplitGraph, z: dict[int, Fraction]) -> Fraction:
    return sum((split.g.edge(eid).cost * val for eid, val in z.items()), ZERO)


@dataclass
class ReroutedCirculation:
    split: SplitGraph
    z: dict[int, Fraction]
    q_level: list[int]
    cost_before: Fraction


def _decompose_unit_through(g: Digraph, z: dict[int, Fraction], inside: frozenset
                            ) -> list[tuple[int, list[int], int, Fraction]]:
    """Extract cycles through the contracted outside of ``inside`` carrying
    one unit of weight in total: (entry edge, path inside, exit edge, weight)
    with the weighted sum staying below z.  Inner cycles met along the way
    are peeled off and discarded; every peel zeroes at least one edge."""
    remaining = dict(z)
    out: list[tuple[int, list[int], int, Fraction]] = []
    collected = ZERO
    entry_candidates = sorted(
        eid for eid in remaining
        if g.edge(eid).head in inside and g.edge(eid).tail not in inside
    )
    guard = 0
    while collected < ONE:
        guard += 1
        if guard > 4 * g.m + 8:
            raise InternalCheckError("cycle-decomposition-stuck", sorted(inside))
        e_in = next((eid for eid in entry_candidates if remaining[eid] > 0), None)
        if e_in is None:
            raise InternalCheckError("cycle-decomposition-underflow",
                                     f"collected {collected}")
        path: list[int] = []
        pos: dict[int, int] = {}
        v = g.edge(e_in).head
        pos[v] = 0
        e_out = None
        while e_out is None:
            nxt = next(
                (eid for eid in sorted(g.out_edges[v]) if remaining[eid] > 0), None
            )
            if nxt is None:
                raise InternalCheckError("cycle-decomposition-deadend", v)
            head = g.edge(nxt).head
            if head not in inside:
                e_out = nxt
                break
            if head in pos:
                # peel the inner cycle and continue from its start
                cycle = path[pos[head]:] + [nxt]
                eps = min(remaining[eid] for eid in cycle)
                for eid in cycle:
                    remaining[eid] -= eps
                for eid in path[pos[head]:]:
                    del pos[g.edge(eid).head]
                path = path[: pos[head]]
                v = head
                pos[head] = len(path)
                continue
            path.append(nxt)
            v = head
            pos[v] = len(path)
        weight = min(
            [remaining[e_in], remaining[e_out]] + [remaining[eid] for eid in path]
        )
        weight = min(weight, ONE - collected)
        for eid in [e_in, e_out] + path:
            remaining[eid] -= weight
        out.append((e_in, path, e_out, weight))
        collected += weight
    return out


def lift_and_reroute(cover: SubtourCoverInstance, witness: WitnessFlow,
                     aug: AugmentedGraph,
                     checker: Optional[Checker] = None) -> ReroutedCirculation:
    """Build the split circulation of the augmented graph and reroute half a
    unit of the flow through each first residual SCC onto its auxiliary
    vertex, entering at the majority level."""
    checker = checker or Checker()
    inst = cover.pair.instance
    backbone = cover.pair.backbone_vertices
    split = build_split_graph(aug.g, aug.edge_class, backbone)
    x_aug = [ZERO] * aug.g.m
    f_aug = [ZERO] * aug.g.m
    for eid in range(inst.g.m):
        x_aug[eid] = inst.x[eid]
        f_aug[eid] = witness.f[eid]
    z = lift_to_split(split, x_aug, f_aug, backbone)
    checker.check(is_split_circulation(split, z), "lifted-z-circulation")
    cost_z = split_cost(split, z)
    checker.check(cost_z == inst.lp_value, "lifted-z-cost",
                  lambda: f"{cost_z} != {inst.lp_value}")
    q_level: list[int] = []
    for i in range(aug.k):
        inside = split.level_set(aug.w_hat[i])
        crossing_in = sum(
            (z[eid] for eid in split.g.delta_minus(inside)), ZERO
        )
        checker.check(crossing_in >= ONE, "rerouting-crossing-mass",
                      lambda: f"component {i}: {crossing_in}")
        pieces = _decompose_unit_through(split.g, z, inside)
        checker.check(sum((w for (_, _, _, w) in pieces), ZERO) == ONE,
                      "decomposition-unit-weight")
        by_level = {0: [], 1: []}
        for piece in pieces:
            by_level[split.g.edge(piece[0]).head % 2].append(piece)
        sum0 = sum((w for (_, _, _, w) in by_level[0]), ZERO)
        q = 0 if sum0 >= HALF else 1
        q_level.append(q)
        budget = HALF
        for e_in, path, e_out, weight in by_level[q]:
            if budget == 0:
                break
            lam = min(weight, budget)
            budget -= lam
            p = split.g.edge(e_out).tail % 2
            checker.check(p <= q, "rerouting-exit-level",
                          lambda: f"p={p} q={q} component {i}")
            in_kind = split.kind[e_in]
            out_kind = split.kind[e_out]
            in_base = aug.in_copy[(in_kind[1], i)]
            out_base = aug.out_copy[(out_kind[1], i)]
            in_split = split.lower_of[in_base] if q == 0 else split.upper_of[in_base]
            out_split = split.lower_of[out_base] if p == 0 else split.upper_of[out_base]
            z[e_in] -= lam
            z[in_split] = z.get(in_split, ZERO) + lam
            for eid in path:
                z[eid] -= lam
            z[e_out] -= lam
            z[out_split] = z.get(out_split, ZERO) + lam
            if p < q:
                down = split.down_of[aug.aux_of[i]]
                z[down] += lam
        checker.check(budget == 0, "rerouting-half-unit",
                      lambda: f"component {i} moved {HALF - budget}")
        checker.check(all(val >= 0 for val in z.values()), "rerouted-z-nonnegative")
    checker.check(is_split_circulation(split, z), "rerouted-z-circulation")
    checker.check(split_cost(split, z) <= cost_z, "rerouted-z-cost")
    for i, q in enumerate(q_level):
        a = aug.aux_of[i]
        down = split.down_of[a]
        for level in (0, 1):
            node = split.lower(a) if level == 0 else split.upper(a)
            inflow = sum(
                (z[eid] for eid in split.g.in_edges[node] if eid != down), ZERO
            )
            expected = HALF if level == q else ZERO
            checker.check(inflow == expected, "aux-inflow-level",
                          lambda: f"component {i} level {level}: {inflow}")
    return ReroutedCirculation(split, z, q_level, cost_z)


@dataclass
class RoundedCirculation:
    z_star: dict[int, int]
    f_bar: EdgeMultiset
    f_star_lower: dict[int, int]  # witness part per augmented eid


def _ceil2(value: Fraction) -> int:
    doubled = 2 * value
    return int(doubled) if doubled.denominator == 1 else int(doubled) + 1


def round_circulation(rerouted: ReroutedCirculation, aug: AugmentedGraph,
                      cover: SubtourCoverInstance,
                      checker: Optional[Checker] = None) -> RoundedCirculation:
    """Round twice the rerouted circulation to an integral one by exact
    min-cost flow with per-edge caps, an in-degree cap on every upper-level
    vertex, and a forced unit through each auxiliary vertex's chosen level.
    All four rounding properties plus the structural consequences used by
    the cost analysis are asserted."""
    checker = checker or Checker()
    split = rerouted.split
    sg = split.g
    z = rerouted.z
    in_cap: dict[int, int] = {}
    for v in range(aug.g.n):
        node = split.upper(v)
        in_cap[node] = _ceil2(sum((z[eid] for eid in sg.in_edges[node]), ZERO))
    forced_nodes = {}
    for i, q in enumerate(rerouted.q_level):
        a = aug.aux_of[i]
        node = split.lower(a) if q == 0 else split.upper(a)
        forced_nodes[node] = True
    # node-split: every split vertex becomes (in, out); constrained vertices
    # get a bounded internal arc
    n_nodes = 2 * sg.n
    prob = CirculationProblem(n_nodes)

    def in_node(v: int) -> int:
        return 2 * v

    def out_node(v: int) -> int:
        return 2 * v + 1

    for v in range(sg.n):
        if v in forced_nodes:
            lo, hi = 1, 1
        elif v in in_cap:
            lo, hi = 0, in_cap[v]
        else:
            lo, hi = 0, 10 ** 9
        prob.add_arc(in_node(v), out_node(v), lo, hi, ZERO)
    edge_arc: dict[int, int] = {}
    for eid in range(sg.m):
        e = sg.edge(eid)
        edge_arc[eid] = prob.add_arc(out_node(e.tail), in_node(e.head), 0,
                                     _ceil2(z[eid]), e.cost)
    flows = prob.solve()
    if flows is None:
        raise InternalCheckError("rounding-infeasible",
                                 "2z is a feasible fractional point")
    z_star = {eid: flows[edge_arc[eid]] for eid in range(sg.m)}
    for eid in range(sg.m):
        checker.check(0 <= z_star[eid] <= _ceil2(z[eid]), "rounding-edge-caps",
                      lambda: f"edge {eid}")
    cost_star = sum((sg.edge(eid).cost * z_star[eid] for eid in range(sg.m)), ZERO)
    checker.check(cost_star <= 2 * split_cost(split, z), "rounding-cost-bound",
                  lambda: f"{cost_star}")
    for v in range(aug.g.n):
        node = split.upper(v)
        got = sum(z_star[eid] for eid in sg.in_edges[node])
        checker.check(got <= in_cap[node], "rounding-upper-indegree",
                      lambda: f"vertex {v}: {got}")
    for i in range(aug.k):
        a = aug.aux_of[i]
        in0 = sum(z_star[eid] for eid in sg.in_edges[split.lower(a)])
        in1 = sum(z_star[eid] for eid in sg.in_edges[split.upper(a)])
        checker.check(in0 == 1 or in1 == 1, "rounding-aux-unit",
                      lambda: f"component {i}: {in0},{in1}")
    # project to the augmented graph
    f_bar = EdgeMultiset()
    f_star_lower: dict[int, int] = {}
    for eid in range(aug.g.m):
        lo = split.lower_of.get(eid)
        up = split.upper_of.get(eid)
        mult = (z_star[lo] if lo is not None else 0) + (
            z_star[up] if up is not None else 0
        )
        if mult:
            f_bar.add(eid, mult)
        f_star_lower[eid] = z_star[lo] if lo is not None else 0
    _split_cycles_touch_backbone(split, z_star, aug, checker)
    _check_rounded_structure(f_bar, f_star_lower, aug, cover, checker)
    return RoundedCirculation(z_star, f_bar, f_star_lower)


def _split_cycles_touch_backbone(split: SplitGraph, z_star: dict[int, int],
                                 aug: AugmentedGraph,
                                 checker: Checker) -> None:
    """Cycle-decompose the integral split circulation and re-check that any
    cycle whose image crosses a non-singleton family set climbs an up edge
    of a backbone vertex (the split graph's reason for existing)."""
    remaining = dict(z_star)
    sg = split.g
    while True:
        start = next((eid for eid in sorted(remaining) if remaining[eid] > 0),
                     None)
        if start is None:
            break
        cycle = [start]
        pos = {sg.edge(start).tail: 0}
        v = sg.edge(start).head
        while v not in pos:
            pos[v] = len(cycle)
            nxt = next(eid for eid in sorted(sg.out_edges[v])
                       if remaining[eid] > 0)
            cycle.append(nxt)
            v = sg.edge(nxt).head
        cycle = cycle[pos[v]:]
        for eid in cycle:
            remaining[eid] -= 1
        crosses = any(
            aug.edge_class[split.kind[eid][1]] != NEUTRAL
            for eid in cycle if split.kind[eid][0] in ("lower", "upper")
        )
        if crosses:
            ups = [eid for eid in cycle if split.kind[eid][0] == "up"]
            checker.check(bool(ups), "split-cycle-touches-backbone",
                          lambda: [split.kind[eid] for eid in cycle])


def _check_rounded_structure(f_bar: EdgeMultiset, f_star: dict[int, int],
                             aug: AugmentedGraph, cover: SubtourCoverInstance,
                             checker: Checker) -> None:
    g = aug.g
    inst = cover.pair.instance
    backbone = cover.pair.backbone_vertices
    for i in range(aug.k):
        a = aug.aux_of[i]
        indeg = sum(k for eid, k in f_bar.mult.items() if g.edge(eid).head == a)
        checker.check(indeg == 1, "aux-one-incoming", lambda: f"component {i}")
        outdeg = sum(k for eid, k in f_bar.mult.items() if g.edge(eid).tail == a)
        checker.check(outdeg == 1, "aux-one-outgoing", lambda: f"component {i}")
    support = [eid for eid, k in f_star.items() if k > 0]
    checker.check(_support_acyclic(g, support), "rounded-witness-acyclic")
    comps = undirected_components(g, f_bar.mult.keys())
    for comp in comps:
        if comp & backbone:
            continue
        comp_edges = [eid for eid in f_bar.mult
                      if g.edge(eid).tail in comp and g.edge(eid).head in comp]
        if not comp_edges:
            continue
        checker.check(all(f_star[eid] == 0 for eid in comp_edges),
                      "backbone-free-zero-witness", lambda: sorted(comp))
        checker.check(
            all(aug.edge_class[eid] != FORWARD for eid in comp_edges),
            "backbone-free-no-forward", lambda: sorted(comp))
        for v in comp:
            if v >= aug.base.n or inst.y_vertex(v) == 0:
                continue
            indeg = sum(k for eid, k in f_bar.mult.items()
                        if g.edge(eid).head == v)
            checker.check(indeg <= 2, "backbone-free-indegree",
                          lambda: f"vertex {v}: in-degree {indeg}")


def map_back(rounded: RoundedCirculation, aug: AugmentedGraph,
             cover: SubtourCoverInstance,
             checker: Optional[Checker] = None) -> EdgeMultiset:
    """Replace auxiliary-vertex edges by their base edges and repair the
    Eulerian degrees with a path inside each component."""
    checker = checker or Checker()
    inst = cover.pair.instance
    g = inst.g
    f = EdgeMultiset()
    entry: dict[int, int] = {}
    exit_: dict[int, int] = {}
    for eid, mult in rounded.f_bar.items():
        e = aug.g.edge(eid)
        base = aug.base_eid[eid]
        f.add(base, mult)
        i_head = aug.aux_index(e.head)
        if i_head is not None:
            entry[i_head] = g.edge(base).head
        i_tail = aug.aux_index(e.tail)
        if i_tail is not None:
            exit_[i_tail] = g.edge(base).tail
    for i in range(aug.k):
        s, t = entry[i], exit_[i]
        checker.check(s in aug.w_hat[i] and t in aug.w_hat[i],
                      "map-back-endpoints-inside", lambda: f"component {i}")
        path = bfs_path(g, s, t, allowed_vertices=aug.w_sets[i])
        checker.check(path is not None, "map-back-path-exists",
                      lambda: f"component {i}: {s}->{t}")
        for s_fam in inst.family.nonsingletons():
            enters, exits = path_crossings(g, path, s_fam)
            checker.check(enters == 0 and exits == 0, "map-back-path-in-component",
                          lambda: f"component {i} crosses {sorted(s_fam)}")
        path_cost = sum((g.edge(eid).cost for eid in path), ZERO)
        mass = sum((2 * inst.y_vertex(v) for v in aug.w_sets[i]), ZERO)
        checker.check(path_cost <= mass, "map-back-path-cost",
                      lambda: f"component {i}: {path_cost} > {mass}")
        for eid in path:
            f.add(eid)
    indeg, outdeg = f.degrees(g)
    for v in range(g.n):
        checker.check(indeg.get(v, 0) == outdeg.get(v, 0), "mapped-back-eulerian",
                      lambda: f"vertex {v}")
    return f


def subtour_cover(cover: SubtourCoverInstance,
                  checker: Optional[Checker] = None) -> EdgeMultiset:
    """Full (3,2,1) subtour-cover pipeline with every contract asserted."""
    checker = checker or Checker()
    cover.validate(checker)
    inst = cover.pair.instance
    g = inst.g
    levels = build_level_structure(cover.pair)
    witness = compute_witness_flow(cover, levels, checker)
    aug = build_augmented_graph(cover, witness, levels, checker)
    rerouted = lift_and_reroute(cover, witness, aug, checker)
    rounded = round_circulation(rerouted, aug, cover, checker)
    f = map_back(rounded, aug, cover, checker)
    # solution properties
    indeg, outdeg = f.degrees(g)
    for v in range(g.n):
        checker.check(indeg.get(v, 0) == outdeg.get(v, 0), "cover-eulerian",
                      lambda: f"vertex {v}")
    for i, w in enumerate(cover.components()):
        checker.check(f.crossing(g, w) > 0, "cover-crosses-component",
                      lambda: f"W_{i + 1}={sorted(w)}")
    comps = undirected_components(g, f.mult.keys())
    backbone = cover.pair.backbone_vertices
    for comp in comps:
        comp_edges = EdgeMultiset(
            {eid: k for eid, k in f.mult.items()
             if g.edge(eid).tail in comp and g.edge(eid).head in comp}
        )
        if not comp_edges:
            continue
        crosses_family = any(
            comp_edges.crossing(g, s) > 0 for s in inst.family.nonsingletons()
        )
        if crosses_family:
            checker.check(bool(comp & backbone), "cover-crossing-touches-backbone",
                          lambda: sorted(comp))
        if not comp & backbone:
            mass = sum((2 * inst.y_vertex(v) for v in comp), ZERO)
            checker.check(comp_edges.cost(g) <= SUBTOUR_COVER_ALPHA * mass,
                          "cover-component-bound",
                          lambda: f"{sorted(comp)}: {comp_edges.cost(g)} > 3*{mass}")
    global_bound = SUBTOUR_COVER_KAPPA * inst.lp_value + \
        SUBTOUR_COVER_BETA * cover.pair.outside_singleton_mass()
    checker.check(f.cost(g) <= global_bound, "cover-global-bound",
                  lambda: f"{f.cost(g)} > {global_bound}")
    return f
