"""The recursive reduction from strongly laminar instances to vertebrate
pairs, and the top-level solver.

For a window W (a family set or the whole vertex set) the reduction fixes a
backbone from the two nice paths between the pair maximizing the reach
quantity D_W, contracts the outside and every maximal family set the
backbone misses, solves the resulting vertebrate pair, lifts the solution
back along the stored nice paths, and recurses into the contracted sets.
Each level's cost bound, the lifting's cost monotonicity, and the final
(22 + epsilon) guarantee against the LP value are asserted exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .checks import Checker
from .errors import ContractViolation, InternalCheckError
from .graph import (
    Digraph,
    EdgeMultiset,
    LaminarFamily,
    contract,
    euler_walk,
    is_eulerian_connected,
    undirected_components,
)
from .instance import StronglyLaminarInstance
from .lp import build_strongly_laminar_instance
from .pair import VertebratePair
from .svensson import vertebrate_solve

ZERO = Fraction(0)

KAPPA = Fraction(2)


def eta_for(epsilon: Fraction) -> Fraction:
    """Vertebrate-pair guarantee from the (3,2,1) subtour-cover solver."""
    return Fraction(14) + Fraction(epsilon)


@dataclass
class TourCertificate:
    """The verifiable output: a tour, its Euler walk, exact cost and ratio."""

    tour: EdgeMultiset
    walk: list[int]
    cost: Fraction
    lp_value: Fraction
    ratio: Fraction
    epsilon: Fraction


def construct_backbone(inst: StronglyLaminarInstance, w_set: frozenset,
                       checker: Optional[Checker] = None):
    """Backbone for the window: both fixed nice paths between the reach
    argmax pair, glued into a closed walk.  Returns the backbone multiset,
    its vertex set, and the maximal family sets it misses."""
    checker = checker or Checker()
    value_w, d_w, u_star, v_star = inst.value_and_dw(w_set, checker)
    forward = inst.nice_path(u_star, v_star)
    backward = inst.nice_path(v_star, u_star)
    backbone = EdgeMultiset()
    for eid in forward:
        backbone.add(eid)
    for eid in backward:
        backbone.add(eid)
    if backbone:
        touched = backbone.vertices(inst.g)
    else:
        touched = frozenset({u_star})
    checker.check(backbone.cost(inst.g) <= 2 * d_w, "backbone-cost",
                  lambda: f"{backbone.cost(inst.g)} > 2*{d_w}")
    candidates = [s for s in inst.family.members
                  if s < w_set and not (s & touched)]
    missed = [s for s in candidates
              if not any(s < t for t in candidates)]
    missed.sort(key=min)
    slack = sum(
        (2 * inst.family.weight(s) + inst.value(s) for s in missed), ZERO
    )
    checker.check(slack <= value_w - d_w, "missed-sets-slack",
                  lambda: f"{slack} > {value_w} - {d_w}")
    return backbone, touched, missed, value_w, d_w, (u_star, v_star)


def _build_child_instance(inst: StronglyLaminarInstance, w_set: frozenset,
                          backbone_vertices: frozenset, missed: list[frozenset],
                          d_w: Fraction, reach_of: dict[frozenset, Fraction],
                          checker: Checker):
    """Contract the window complement and the missed sets, push x forward,
    and re-derive the child family with its adjusted weights."""
    g = inst.g
    ground = inst.ground
    classes = list(missed)
    if w_set != ground:
        classes.append(ground - w_set)
    child_graph_raw, cmap = contract(g, classes)
    child_x = [inst.x[cmap.origin_of(eid)] for eid in range(child_graph_raw.m)]
    weighted: list[tuple[frozenset, Fraction]] = []
    for s in inst.family.members:
        if s < w_set and s & backbone_vertices:
            image = frozenset(cmap.child_of(v) for v in s)
            weighted.append((image, inst.family.weight(s)))
    for s in missed:
        image = frozenset({cmap.child_of(min(s))})
        weighted.append((image, inst.family.weight(s) + reach_of[s] / 2))
    if w_set != ground and d_w > 0:
        image = frozenset(cmap.child_of(v) for v in w_set)
        weighted.append((image, d_w / 2))
    family = LaminarFamily(weighted, child_graph_raw.n)
    induced = []
    for e in child_graph_raw.edges:
        cost = ZERO
        for s, y in family.weights.items():
            if (e.tail in s) != (e.head in s):
                cost += y
        induced.append(cost)
    child_graph = Digraph(child_graph_raw.n,
                          [(e.tail, e.head, induced[e.eid])
                           for e in child_graph_raw.edges])
    child = StronglyLaminarInstance(child_graph, family, child_x)
    child.validate(checker)
    return child, cmap


def _lift_component_walk(inst: StronglyLaminarInstance, child, cmap,
                         walk: list[int], outside_vertex: Optional[int],
                         missed_of_vertex: dict[int, frozenset],
                         lifted: EdgeMultiset) -> None:
    """Map one Euler walk of the child solution back to parent edges,
    splicing nice paths at every pass through a contracted vertex."""
    g = inst.g
    length = len(walk)
    for idx, eid in enumerate(walk):
        e = child.g.edge(eid)
        if e.tail != outside_vertex and e.head != outside_vertex:
            lifted.add(cmap.origin_of(eid))
    for idx, eid in enumerate(walk):
        e = child.g.edge(eid)
        mid = e.head
        out_eid = walk[(idx + 1) % length]
        out_edge = child.g.edge(out_eid)
        if out_edge.tail != mid:
            raise InternalCheckError("walk-continuity", (eid, out_eid))
        origin_in = g.edge(cmap.origin_of(eid))
        origin_out = g.edge(cmap.origin_of(out_eid))
        if mid == outside_vertex:
            # leave the window and come back: swap the crossing pair for a
            # nice path inside it
            for path_eid in inst.nice_path(origin_in.tail, origin_out.head):
                lifted.add(path_eid)
        elif mid in missed_of_vertex:
            # traverse a contracted set: bridge entry to exit inside it
            for path_eid in inst.nice_path(origin_in.head, origin_out.tail):
                lifted.add(path_eid)


def contracted_pair(inst: StronglyLaminarInstance, w_set: frozenset,
                    checker: Optional[Checker] = None):
    """Steps 1-2 of the reduction: backbone, contraction, child instance.

    Returns (pair, backbone, missed sets, contraction map, value(W), D_W).
    """
    checker = checker or Checker()
    backbone, touched, missed, value_w, d_w, _ = construct_backbone(
        inst, w_set, checker
    )
    reach_of = {}
    for s in missed:
        _, d_s, _, _ = inst.value_and_dw(s, checker)
        reach_of[s] = d_s
    child, cmap = _build_child_instance(inst, w_set, touched, missed, d_w,
                                        reach_of, checker)
    child_edge_of = cmap.child_edge_of()
    child_backbone = EdgeMultiset()
    for eid, mult in backbone.items():
        if eid not in child_edge_of:
            raise InternalCheckError("backbone-survives-contraction", eid)
        child_backbone.add(child_edge_of[eid], mult)
    child_backbone_vertices = frozenset(cmap.child_of(v) for v in touched)
    pair = VertebratePair(child, child_backbone, child_backbone_vertices)
    pair.validate(checker)
    return pair, backbone, touched, missed, cmap, value_w, d_w


def reduce_and_solve(inst: StronglyLaminarInstance, w_set: frozenset,
                     vp_solver: Callable[[VertebratePair], EdgeMultiset],
                     epsilon: Fraction,
                     checker: Optional[Checker] = None,
                     _calls: Optional[list[int]] = None) -> EdgeMultiset:
    """Tour of the window's induced subgraph via the vertebrate-pair solver.

    The recursion budget is the family size: being laminar, at most 2n + 1
    windows are ever opened.
    """
    checker = checker or Checker()
    if _calls is None:
        _calls = [0]
    _calls[0] += 1
    checker.check(_calls[0] <= 2 * inst.g.n + 1, "recursion-budget",
                  lambda: _calls[0])
    if len(w_set) == 1:
        return EdgeMultiset()
    pair, backbone, touched, missed, cmap, value_w, d_w = contracted_pair(
        inst, w_set, checker
    )
    child = pair.instance
    solution = vp_solver(pair)
    solver_bound = KAPPA * child.lp_value + eta_for(epsilon) * \
        pair.outside_singleton_mass()
    checker.check(solution.cost(child.g) <= solver_bound, "solver-contract",
                  lambda: f"{solution.cost(child.g)} > {solver_bound}")

    outside_vertex = (cmap.child_of(min(inst.ground - w_set))
                      if w_set != inst.ground else None)
    missed_of_vertex = {cmap.child_of(min(s)): s for s in missed}
    lifted = EdgeMultiset()
    for comp in undirected_components(child.g, solution.mult.keys()):
        comp_edges = solution.restrict_to(child.g, comp)
        if not comp_edges:
            continue
        walk = euler_walk(child.g, comp_edges, min(comp_edges.vertices(child.g)))
        _lift_component_walk(inst, child, cmap, walk, outside_vertex,
                             missed_of_vertex, lifted)
    checker.check(lifted.cost(inst.g) <= solution.cost(child.g),
                  "lifting-cost-monotone",
                  lambda: f"{lifted.cost(inst.g)} > {solution.cost(child.g)}")
    indeg, outdeg = lifted.degrees(inst.g)
    for v in set(indeg) | set(outdeg):
        checker.check(indeg.get(v, 0) == outdeg.get(v, 0), "lifted-eulerian",
                      lambda: f"vertex {v}")
    # the lifted solution plus the backbone visits everything except the
    # interiors of the missed sets, and crosses into every missed set
    union = lifted.union(backbone)
    interior = set()
    for s in missed:
        interior |= s
    must_cover = w_set - interior
    covered = union.vertices(inst.g) | touched
    checker.check(must_cover <= covered, "lift-covers-window",
                  lambda: sorted(must_cover - covered))
    for s in missed:
        checker.check(union.crossing(inst.g, s) > 0, "lift-crosses-missed",
                      lambda: sorted(s))
    total = lifted.copy()
    for s in missed:
        sub_tour = reduce_and_solve(inst, s, vp_solver, epsilon, checker, _calls)
        total = total.union(sub_tour)
    total = total.union(backbone)
    eulerian, comps = is_eulerian_connected(inst.g, total)
    checker.check(eulerian, "window-tour-eulerian")
    support_comp = next((c for c in comps if c & w_set), None)
    checker.check(support_comp is not None and w_set <= support_comp,
                  "window-tour-spans",
                  lambda: sorted(w_set - (support_comp or frozenset())))
    bound = (2 * KAPPA + 2) * value_w + (KAPPA + eta_for(epsilon)) * (
        value_w - d_w
    )
    checker.check(total.cost(inst.g) <= bound, "window-cost-bound",
                  lambda: f"{total.cost(inst.g)} > {bound}")
    return total


def solve_atsp(g: Digraph, epsilon: Fraction,
               checker: Optional[Checker] = None) -> TourCertificate:
    """End-to-end: strongly laminar reduction, recursive vertebrate-pair
    solving, verified tour with cost at most (22 + epsilon) times the LP."""
    checker = checker or Checker()
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ContractViolation("epsilon must be positive")
    inst, lp_value, origin = build_strongly_laminar_instance(g, checker)
    if g.n == 1:
        return TourCertificate(EdgeMultiset(), [], ZERO, ZERO, Fraction(1),
                               epsilon)

    def solver(pair: VertebratePair) -> EdgeMultiset:
        return vertebrate_solve(pair, epsilon, checker=checker)

    tour_inst = reduce_and_solve(inst, inst.ground, solver, epsilon, checker)
    tour = EdgeMultiset()
    for eid, mult in tour_inst.items():
        tour.add(origin[eid], mult)
    cost = tour.cost(g)
    checker.check(cost == tour_inst.cost(inst.g), "tour-cost-invariant",
                  lambda: f"{cost} != {tour_inst.cost(inst.g)}")
    ratio_cap = Fraction(22) + epsilon
    checker.check(cost <= ratio_cap * lp_value, "approximation-guarantee",
                  lambda: {"cost": cost, "cap": ratio_cap, "lp_value": lp_value,
                           "epsilon": epsilon, "tour": sorted(tour.items())})
    eulerian, comps = is_eulerian_connected(g, tour)
    checker.check(eulerian, "tour-eulerian")
    checker.check(comps == [frozenset(range(g.n))], "tour-spans")
    walk = euler_walk(g, tour, 0)
    if lp_value == 0:
        checker.check(cost == 0, "zero-lp-zero-cost")
        ratio = Fraction(1)
    else:
        ratio = cost / lp_value
    return TourCertificate(tour, walk, cost, lp_value, ratio, epsilon)
