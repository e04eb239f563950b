"""Directed multigraph primitives and the laminar-family machinery.

Everything downstream (LP solving, flow rounding, the recursive reduction)
works on these types.  Graphs, families, and contraction maps are immutable
after construction; edge multisets are value-like builders whose combining
operations (union, restrict_to) return fresh objects, and every algorithm
here is a pure function, so shared instances are safe across threads.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

from .errors import ContractViolation, InputError

ZERO = Fraction(0)


@dataclass(frozen=True)
class Edge:
    """One directed edge of a multigraph; ids are dense 0..m-1."""

    eid: int
    tail: int
    head: int
    cost: Fraction


class Digraph:
    """Vertex/edge-indexed directed multigraph with nonnegative rational costs.

    Parallel edges are permitted; self-loops are rejected (contraction
    silently discards the loops it would create, and nothing else ever
    produces one).
    """

    __slots__ = ("n", "edges", "out_edges", "in_edges")

    def __init__(self, n: int, edge_list: Iterable[tuple[int, int, Fraction]]):
        if n < 1:
            raise InputError("vertex count must be at least 1")
        edges = []
        out_edges: list[list[int]] = [[] for _ in range(n)]
        in_edges: list[list[int]] = [[] for _ in range(n)]
        for eid, (tail, head, cost) in enumerate(edge_list):
            if not (0 <= tail < n and 0 <= head < n):
                raise InputError(f"edge endpoint out of range: ({tail},{head}) with n={n}")
            if tail == head:
                raise InputError(f"self-loop at vertex {tail} not allowed")
            cost = Fraction(cost)
            if cost < 0:
                raise InputError(f"negative cost {cost} on edge ({tail},{head})")
            edges.append(Edge(eid, tail, head, cost))
            out_edges[tail].append(eid)
            in_edges[head].append(eid)
        self.n = n
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.out_edges: tuple[tuple[int, ...], ...] = tuple(tuple(a) for a in out_edges)
        self.in_edges: tuple[tuple[int, ...], ...] = tuple(tuple(a) for a in in_edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge(self, eid: int) -> Edge:
        try:
            return self.edges[eid]
        except IndexError:
            raise InputError(f"unknown edge id {eid}") from None

    def vertices(self) -> range:
        return range(self.n)

    def delta_plus(self, vertex_set: frozenset | set) -> list[int]:
        """Edge ids leaving the set."""
        return [e for v in vertex_set for e in self.out_edges[v]
                if self.edges[e].head not in vertex_set]

    def delta_minus(self, vertex_set: frozenset | set) -> list[int]:
        """Edge ids entering the set."""
        return [e for v in vertex_set for e in self.in_edges[v]
                if self.edges[e].tail not in vertex_set]

    def is_strongly_connected(self, restrict: Optional[frozenset] = None) -> bool:
        verts = set(restrict) if restrict is not None else set(range(self.n))
        if not verts:
            return False
        start = min(verts)
        for forward in (True, False):
            seen = {start}
            stack = [start]
            while stack:
                v = stack.pop()
                eids = self.out_edges[v] if forward else self.in_edges[v]
                for eid in eids:
                    e = self.edges[eid]
                    w = e.head if forward else e.tail
                    if w in verts and w not in seen:
                        seen.add(w)
                        stack.append(w)
            if seen != verts:
                return False
        return True


class EdgeMultiset:
    """A multiset of edge ids of a host graph (multiplicities >= 0)."""

    __slots__ = ("mult",)

    def __init__(self, mult: Optional[dict[int, int]] = None):
        self.mult: dict[int, int] = {}
        if mult:
            for eid, k in mult.items():
                self.add(eid, k)

    def add(self, eid: int, k: int = 1) -> None:
        if k < 0:
            raise ContractViolation("multiplicity must be nonnegative")
        if k:
            self.mult[eid] = self.mult.get(eid, 0) + k

    def copy(self) -> "EdgeMultiset":
        out = EdgeMultiset()
        out.mult = dict(self.mult)
        return out

    def union(self, other: "EdgeMultiset") -> "EdgeMultiset":
        out = self.copy()
        for eid, k in other.mult.items():
            out.add(eid, k)
        return out

    def items(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.mult.items()))

    def expand(self) -> list[int]:
        """Edge ids with repetition, ascending."""
        out = []
        for eid, k in self.items():
            out.extend([eid] * k)
        return out

    def total(self) -> int:
        return sum(self.mult.values())

    def __len__(self) -> int:
        return len(self.mult)

    def __bool__(self) -> bool:
        return bool(self.mult)

    def __eq__(self, other) -> bool:
        return isinstance(other, EdgeMultiset) and self.mult == other.mult

    def __contains__(self, eid: int) -> bool:
        return eid in self.mult

    def cost(self, g: Digraph) -> Fraction:
        return sum((g.edge(eid).cost * k for eid, k in self.mult.items()), ZERO)

    def vertices(self, g: Digraph) -> frozenset:
        verts = set()
        for eid in self.mult:
            e = g.edge(eid)
            verts.add(e.tail)
            verts.add(e.head)
        return frozenset(verts)

    def degrees(self, g: Digraph) -> tuple[dict[int, int], dict[int, int]]:
        """(in-degree, out-degree) per vertex under multiplicity."""
        indeg: dict[int, int] = {}
        outdeg: dict[int, int] = {}
        for eid, k in self.mult.items():
            e = g.edge(eid)
            outdeg[e.tail] = outdeg.get(e.tail, 0) + k
            indeg[e.head] = indeg.get(e.head, 0) + k
        return indeg, outdeg

    def restrict_to(self, g: Digraph, vertex_set: frozenset | set) -> "EdgeMultiset":
        """Sub-multiset of edges with both endpoints in the given set."""
        out = EdgeMultiset()
        for eid, k in self.mult.items():
            e = g.edge(eid)
            if e.tail in vertex_set and e.head in vertex_set:
                out.add(eid, k)
        return out

    def crossing(self, g: Digraph, vertex_set: frozenset | set) -> int:
        """Total multiplicity of edges with exactly one endpoint in the set."""
        count = 0
        for eid, k in self.mult.items():
            e = g.edge(eid)
            if (e.tail in vertex_set) != (e.head in vertex_set):
                count += k
        return count


def check_laminar(sets: Sequence[frozenset]) -> bool:
    """True iff every pair of sets is nested or disjoint."""
    sets = [frozenset(s) for s in sets]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            a, b = sets[i], sets[j]
            if not (a <= b or b <= a or not (a & b)):
                return False
    return True


class LaminarFamily:
    """A laminar family of vertex sets, each with a positive rational weight.

    Members are kept in a canonical order (decreasing size, then sorted
    contents) so iteration is deterministic.
    """

    __slots__ = ("members", "weights")

    def __init__(self, weighted_sets: Iterable[tuple[frozenset, Fraction]], n: Optional[int] = None):
        pairs = []
        seen = set()
        for s, y in weighted_sets:
            s = frozenset(s)
            if not s:
                raise ContractViolation("empty set in laminar family")
            if s in seen:
                raise ContractViolation(f"duplicate set {sorted(s)} in laminar family")
            y = Fraction(y)
            if y <= 0:
                raise ContractViolation(f"nonpositive weight {y} for {sorted(s)}")
            seen.add(s)
            pairs.append((s, y))
        pairs.sort(key=lambda p: (-len(p[0]), sorted(p[0])))
        self.members: tuple[frozenset, ...] = tuple(p[0] for p in pairs)
        self.weights: dict[frozenset, Fraction] = {s: y for s, y in pairs}
        if not check_laminar(self.members):
            raise ContractViolation("set system is not laminar")
        if n is not None and len(self.members) > 2 * n:
            raise ContractViolation(f"laminar family has {len(self.members)} > 2n members")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[frozenset]:
        return iter(self.members)

    def __contains__(self, s: frozenset) -> bool:
        return frozenset(s) in self.weights

    def weight(self, s: frozenset) -> Fraction:
        return self.weights[frozenset(s)]

    def singleton_weight(self, v: int) -> Fraction:
        return self.weights.get(frozenset((v,)), ZERO)

    def nonsingletons(self) -> list[frozenset]:
        return [s for s in self.members if len(s) >= 2]

    def strictly_inside(self, w: frozenset) -> list[frozenset]:
        return [s for s in self.members if s < w]

    def containing(self, v: int) -> list[frozenset]:
        return [s for s in self.members if v in s]

    def minimal_containing(self, verts: Iterable[int], ground: frozenset) -> frozenset:
        """Smallest member (or the ground set) containing all given vertices."""
        vs = set(verts)
        best = ground
        for s in self.members:
            if vs <= s and len(s) < len(best):
                best = s
        return best


@dataclass(frozen=True)
class ContractionMap:
    """Bookkeeping for a vertex contraction.

    vertex_map[v] is the child vertex of parent vertex v; edge_origin[e'] is
    the parent edge id a child edge e' came from.  Contraction never mutates
    the parent graph, so recursive algorithms can keep using it.
    """

    vertex_map: tuple[int, ...]
    edge_origin: tuple[int, ...]

    def child_of(self, parent_vertex: int) -> int:
        return self.vertex_map[parent_vertex]

    def origin_of(self, child_eid: int) -> int:
        return self.edge_origin[child_eid]

    def child_edge_of(self) -> dict[int, int]:
        """Inverse edge map (parent eid -> child eid); origins are distinct."""
        return {parent: child for child, parent in enumerate(self.edge_origin)}


def contract(g: Digraph, classes: Sequence[frozenset]) -> tuple[Digraph, ContractionMap]:
    """Contract each vertex class into a single vertex.

    Classes must be pairwise disjoint.  Remaining vertices survive as
    singletons; child ids are assigned by scanning parent ids in order, so
    the result is deterministic.  Edges inside a class disappear.
    """
    classes = [frozenset(c) for c in classes]
    seen: set[int] = set()
    for c in classes:
        if not c:
            raise InputError("empty contraction class")
        if c & seen:
            raise InputError("contraction classes overlap")
        if not c <= set(range(g.n)):
            raise InputError("contraction class contains unknown vertex")
        seen |= c
    class_of_vertex: dict[int, int] = {}
    for idx, c in enumerate(classes):
        for v in c:
            class_of_vertex[v] = idx
    vertex_map = [-1] * g.n
    next_id = 0
    class_child: dict[int, int] = {}
    for v in range(g.n):
        if vertex_map[v] >= 0:
            continue
        if v in class_of_vertex:
            idx = class_of_vertex[v]
            if idx not in class_child:
                class_child[idx] = next_id
                next_id += 1
            for u in classes[idx]:
                vertex_map[u] = class_child[idx]
        else:
            vertex_map[v] = next_id
            next_id += 1
    child_edges = []
    origins = []
    for e in g.edges:
        t, h = vertex_map[e.tail], vertex_map[e.head]
        if t == h:
            continue
        child_edges.append((t, h, e.cost))
        origins.append(e.eid)
    child = Digraph(next_id, child_edges)
    return child, ContractionMap(tuple(vertex_map), tuple(origins))


def undirected_components(g: Digraph, support: Iterable[int]) -> list[frozenset]:
    """Components of the undirected support of the given edges, plus isolated
    vertices as singletons.  Sorted by smallest member."""
    parent = list(range(g.n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for eid in support:
        e = g.edge(eid)
        ra, rb = find(e.tail), find(e.head)
        if ra != rb:
            parent[rb] = ra
    groups: dict[int, set[int]] = {}
    for v in range(g.n):
        groups.setdefault(find(v), set()).add(v)
    return sorted((frozenset(s) for s in groups.values()), key=min)


def is_eulerian_connected(g: Digraph, f: EdgeMultiset) -> tuple[bool, list[frozenset]]:
    """Check the balance condition and report undirected components.

    Eulerian means in-multiplicity equals out-multiplicity at every vertex.
    The component list covers all of V (isolated vertices as singletons).
    """
    indeg, outdeg = f.degrees(g)
    eulerian = all(indeg.get(v, 0) == outdeg.get(v, 0) for v in range(g.n))
    return eulerian, undirected_components(g, f.mult.keys())


def euler_walk(g: Digraph, f: EdgeMultiset, start: int) -> list[int]:
    """Closed walk (edge-id sequence) using each edge exactly its multiplicity.

    Hierholzer's algorithm.  Requires f Eulerian with connected support and
    positive degree at the start vertex.
    """
    eulerian, comps = is_eulerian_connected(g, f)
    if not eulerian:
        raise ContractViolation("edge multiset is not Eulerian")
    support_verts = f.vertices(g)
    if start not in support_verts:
        raise ContractViolation(f"start vertex {start} has no edges in the multiset")
    comp_of_start = next(c for c in comps if start in c)
    if not support_verts <= comp_of_start:
        raise ContractViolation("support of the multiset is not connected")
    remaining: dict[int, int] = dict(f.mult)
    # per-vertex list of out-edges with positive multiplicity, ascending eid
    out_pool: dict[int, list[int]] = {}
    for eid in sorted(remaining, reverse=True):
        out_pool.setdefault(g.edge(eid).tail, []).append(eid)
    vertex_stack: list[int] = [start]
    edge_stack: list[int] = []
    walk: list[int] = []
    while vertex_stack:
        v = vertex_stack[-1]
        pool = out_pool.get(v)
        while pool and remaining[pool[-1]] == 0:
            pool.pop()
        if pool:
            eid = pool[-1]
            remaining[eid] -= 1
            if remaining[eid] == 0:
                pool.pop()
            vertex_stack.append(g.edge(eid).head)
            edge_stack.append(eid)
        else:
            vertex_stack.pop()
            if edge_stack:
                walk.append(edge_stack.pop())
    walk.reverse()
    if len(walk) != f.total():
        raise ContractViolation("support of the multiset is not connected")
    return walk


def scc_topological(g: Digraph, restrict: Optional[Iterable[int]] = None) -> list[frozenset]:
    """SCCs of the induced subgraph, in topological order of the condensation.

    Every edge between distinct components goes from an earlier to a later
    one; in particular the first component has no incoming edge from within
    the restriction.  Deterministic: ties broken by smallest member.
    """
    verts = sorted(set(restrict) if restrict is not None else range(g.n))
    vset = set(verts)
    if not vset <= set(range(g.n)):
        raise InputError("restriction contains unknown vertex")
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    sccs: list[set[int]] = []
    counter = [0]

    def strongconnect(root: int) -> None:
        work = [(root, iter([e for e in g.out_edges[root] if g.edges[e].head in vset]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for eid in it:
                w = g.edges[eid].head
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter([e for e in g.out_edges[w] if g.edges[e].head in vset])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                sccs.append(comp)

    for v in verts:
        if v not in index:
            strongconnect(v)
    # Kahn topological sort of the condensation, smallest-member tie-break.
    comp_id = {}
    for i, comp in enumerate(sccs):
        for v in comp:
            comp_id[v] = i
    indegree = [0] * len(sccs)
    succs: list[set[int]] = [set() for _ in sccs]
    for v in verts:
        for eid in g.out_edges[v]:
            w = g.edges[eid].head
            if w in vset and comp_id[v] != comp_id[w] and comp_id[w] not in succs[comp_id[v]]:
                succs[comp_id[v]].add(comp_id[w])
                indegree[comp_id[w]] += 1
    heap = [(min(sccs[i]), i) for i in range(len(sccs)) if indegree[i] == 0]
    heapq.heapify(heap)
    order: list[frozenset] = []
    while heap:
        _, i = heapq.heappop(heap)
        order.append(frozenset(sccs[i]))
        for j in succs[i]:
            indegree[j] -= 1
            if indegree[j] == 0:
                heapq.heappush(heap, (min(sccs[j]), j))
    return order


def bfs_path(g: Digraph, src: int, dst: int,
             allowed_vertices: Optional[frozenset] = None,
             allowed_edges: Optional[set] = None) -> Optional[list[int]]:
    """Edge-id path with fewest edges from src to dst, or None.

    Ties broken by smallest edge id (edges scanned in id order).
    Returns [] when src == dst.
    """
    if allowed_vertices is not None and (src not in allowed_vertices or dst not in allowed_vertices):
        return None
    if src == dst:
        return []
    prev_edge: dict[int, int] = {src: -1}
    frontier = [src]
    while frontier and dst not in prev_edge:
        nxt = []
        for v in frontier:
            for eid in g.out_edges[v]:
                if allowed_edges is not None and eid not in allowed_edges:
                    continue
                w = g.edges[eid].head
                if allowed_vertices is not None and w not in allowed_vertices:
                    continue
                if w not in prev_edge:
                    prev_edge[w] = eid
                    nxt.append(w)
        frontier = nxt
    if dst not in prev_edge:
        return None
    path = []
    v = dst
    while v != src:
        eid = prev_edge[v]
        path.append(eid)
        v = g.edges[eid].tail
    path.reverse()
    return path


def dijkstra_path(g: Digraph, src: int, dst: int,
                  allowed_vertices: Optional[frozenset] = None,
                  allowed_edges: Optional[set] = None) -> Optional[tuple[Fraction, list[int]]]:
    """Cheapest path by exact rational cost, or None if unreachable."""
    if allowed_vertices is not None and (src not in allowed_vertices or dst not in allowed_vertices):
        return None
    dist: dict[int, Fraction] = {src: ZERO}
    prev_edge: dict[int, int] = {}
    done: set[int] = set()
    heap: list[tuple[Fraction, int]] = [(ZERO, src)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == dst:
            break
        for eid in g.out_edges[v]:
            if allowed_edges is not None and eid not in allowed_edges:
                continue
            w = g.edges[eid].head
            if allowed_vertices is not None and w not in allowed_vertices:
                continue
            nd = d + g.edges[eid].cost
            if w not in dist or nd < dist[w]:
                dist[w] = nd
                prev_edge[w] = eid
                heapq.heappush(heap, (nd, w))
    if dst not in done:
        return None
    path = []
    v = dst
    while v != src:
        eid = prev_edge[v]
        path.append(eid)
        v = g.edges[eid].tail
    path.reverse()
    return dist[dst], path
