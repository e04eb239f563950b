"""Instance I/O, generators, the exact Held-Karp oracle, and pipeline runs.

Instances are JSON edge lists with rational costs as strings, or
TSPLIB-style ATSP files with a FULL_MATRIX weight section.  Reports carry
exact rationals serialized as "p/q" strings so runs round-trip bit-exactly
(timings live in a separate sub-object and are excluded from determinism).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .checks import Checker
from .errors import BudgetError, InfeasibleInstanceError, InputError
from .graph import Digraph, EdgeMultiset, euler_walk, is_eulerian_connected
from .rational import format_rational, parse_rational
from .vertebrate import solve_atsp

ZERO = Fraction(0)

HELD_KARP_MAX_N = 18

GENERATOR_MODELS = ("cycle", "random-strong", "two-cluster", "unit-digraph")


def parse_instance(data: bytes | str, fmt: str = "auto") -> tuple[str, Digraph]:
    """Parse an instance; returns (name, graph).

    JSON schema: {"name"?: str, "n": int, "edges": [[tail, head, cost], ...]}
    with cost an integer or a decimal/"p/q" string.  TSPLIB: TYPE ATSP with
    EDGE_WEIGHT_FORMAT FULL_MATRIX; the matrix becomes the complete digraph
    minus the diagonal.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    text = data.strip()
    if not text:
        raise InputError("empty instance input")
    if fmt == "auto":
        fmt = "json" if text.startswith("{") else "tsplib"
    if fmt == "json":
        name, g = _parse_json(text)
    elif fmt == "tsplib":
        name, g = _parse_tsplib(text)
    else:
        raise InputError(f"unknown format {fmt!r}")
    if not g.is_strongly_connected() and g.n > 1:
        raise InfeasibleInstanceError("instance graph is not strongly connected")
    return name, g


def _parse_json(text: str) -> tuple[str, Digraph]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"bad JSON: {exc}") from None
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise InputError('JSON instance needs "n" and "edges"')
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise InputError(f'bad vertex count {n!r}')
    edges = []
    for item in doc["edges"]:
        if not isinstance(item, (list, tuple)) or len(item) != 3:
            raise InputError(f"bad edge entry {item!r}")
        tail, head, cost = item
        if not isinstance(tail, int) or not isinstance(head, int):
            raise InputError(f"bad edge endpoints {item!r}")
        edges.append((tail, head, parse_rational(cost)))
    return str(doc.get("name", "instance")), Digraph(n, edges)


def _parse_tsplib(text: str) -> tuple[str, Digraph]:
    name = "instance"
    dimension = None
    weight_type = None
    weight_format = None
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    numbers: list[Fraction] = []
    in_section = False
    tsp_type = None
    for line in lines:
        upper = line.upper()
        if in_section:
            if upper == "EOF":
                break
            numbers.extend(parse_rational(tok) for tok in line.split())
            continue
        if ":" in line:
            key, _, value = line.partition(":")
            key = key.strip().upper()
            value = value.strip()
            if key == "NAME":
                name = value
            elif key == "TYPE":
                tsp_type = value.upper()
            elif key == "DIMENSION":
                dimension = int(value)
            elif key == "EDGE_WEIGHT_TYPE":
                weight_type = value.upper()
            elif key == "EDGE_WEIGHT_FORMAT":
                weight_format = value.upper()
        elif upper == "EDGE_WEIGHT_SECTION":
            in_section = True
        elif upper == "EOF":
            break
    if tsp_type != "ATSP":
        raise InputError(f"TYPE must be ATSP, got {tsp_type!r}")
    if weight_type not in (None, "EXPLICIT"):
        raise InputError(f"EDGE_WEIGHT_TYPE must be EXPLICIT, got {weight_type!r}")
    if weight_format != "FULL_MATRIX":
        raise InputError("EDGE_WEIGHT_FORMAT must be FULL_MATRIX")
    if dimension is None or dimension < 1:
        raise InputError("missing DIMENSION")
    if len(numbers) != dimension * dimension:
        raise InputError(
            f"matrix needs {dimension * dimension} entries, got {len(numbers)}"
        )
    edges = []
    for i in range(dimension):
        for j in range(dimension):
            if i != j:
                edges.append((i, j, numbers[i * dimension + j]))
    return name, Digraph(dimension, edges)


def instance_to_json(name: str, g: Digraph) -> str:
    return json.dumps({
        "name": name,
        "n": g.n,
        "edges": [[e.tail, e.head, format_rational(e.cost)] for e in g.edges],
    })


def gen_instance(model: str, n: int, seed: int = 0) -> Digraph:
    """Deterministic instance generators.

    cycle: the directed n-cycle with unit costs.  two-cluster: two directed
    cycles joined by a pair of cost-5 arcs (n = 6 reproduces the TwoTri
    fixture).  random-strong: a random Hamiltonian cycle for strong
    connectivity plus random arcs with small rational costs.  unit-digraph:
    the same topology with every cost 1.
    """
    import random as _random

    if n < 1:
        raise InputError("n must be positive")
    if model not in GENERATOR_MODELS:
        raise InputError(f"unknown model {model!r}; choose from {GENERATOR_MODELS}")
    rng = _random.Random(f"{model}/{n}/{seed}")
    if model == "cycle":
        if n == 1:
            return Digraph(1, [])
        return Digraph(n, [(i, (i + 1) % n, Fraction(1)) for i in range(n)])
    if model == "two-cluster":
        if n == 1:
            return Digraph(1, [])
        half = (n + 1) // 2
        edges = []
        for lo, hi in ((0, half), (half, n)):
            size = hi - lo
            if size >= 2:
                for i in range(lo, hi):
                    nxt = lo + (i - lo + 1) % size
                    edges.append((i, nxt, Fraction(1)))
        edges.append((0, half % n, Fraction(5)))
        if half % n != 0:
            edges.append((half % n, 0, Fraction(5)))
        return Digraph(n, edges)
    # random topologies
    if n == 1:
        return Digraph(1, [])
    perm = list(range(n))
    rng.shuffle(perm)

    def cost() -> Fraction:
        if model == "unit-digraph":
            return Fraction(1)
        return Fraction(rng.randint(0, 12), rng.choice([1, 1, 1, 2, 3, 4]))

    edges = [(perm[i], perm[(i + 1) % n], cost()) for i in range(n)]
    extra = rng.randint(n // 2, 2 * n)
    for _ in range(extra):
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.append((u, v, cost()))
    return Digraph(n, edges)


def held_karp_opt(g: Digraph) -> Fraction:
    """Exact optimum tour cost (closed walks allowed): the Hamiltonian
    optimum of the metric closure, by bitmask dynamic programming over
    integer-scaled distances."""
    n = g.n
    if n > HELD_KARP_MAX_N:
        raise BudgetError(f"Held-Karp oracle capped at n = {HELD_KARP_MAX_N}")
    if n == 1:
        return ZERO
    inf = None
    dist: list[list[Optional[Fraction]]] = [[inf] * n for _ in range(n)]
    for v in range(n):
        dist[v][v] = ZERO
    for e in g.edges:
        cur = dist[e.tail][e.head]
        if cur is None or e.cost < cur:
            dist[e.tail][e.head] = e.cost
    for mid in range(n):
        for a in range(n):
            via = dist[a][mid]
            if via is None:
                continue
            row = dist[mid]
            for b in range(n):
                if row[b] is None:
                    continue
                cand = via + row[b]
                if dist[a][b] is None or cand < dist[a][b]:
                    dist[a][b] = cand
    if any(dist[a][b] is None for a in range(n) for b in range(n)):
        raise InfeasibleInstanceError("graph is not strongly connected")
    denom = 1
    for row in dist:
        for val in row:
            denom = denom * val.denominator // math.gcd(denom, val.denominator)
    d = [[int(val * denom) for val in row] for row in dist]
    full = 1 << (n - 1)  # masks over vertices 1..n-1
    big = None
    dp = [[big] * (n - 1) for _ in range(full)]
    for j in range(n - 1):
        dp[1 << j][j] = d[0][j + 1]
    for mask in range(full):
        row = dp[mask]
        for j in range(n - 1):
            cur = row[j]
            if cur is None:
                continue
            rest = (full - 1) & ~mask
            dj = d[j + 1]
            while rest:
                low = rest & -rest
                t = low.bit_length() - 1
                rest ^= low
                cand = cur + dj[t + 1]
                target = dp[mask | low][t]
                if target is None or cand < target:
                    dp[mask | low][t] = cand
    best = None
    for j in range(n - 1):
        val = dp[full - 1][j]
        if val is None:
            continue
        total = val + d[j + 1][0]
        if best is None or total < best:
            best = total
    return Fraction(best, denom)


def verify_tour(g: Digraph, tour: EdgeMultiset) -> tuple[bool, dict]:
    """Check connected + Eulerian + spanning; diagnostics carry the verdicts
    and, when valid, the Euler walk as the human-readable tour."""
    eulerian, comps = is_eulerian_connected(g, tour)
    spanning = comps == [frozenset(range(g.n))]
    diagnostics: dict = {
        "eulerian": eulerian,
        "connected_spanning": spanning,
        "components": [sorted(c) for c in comps],
    }
    ok = eulerian and spanning
    if ok and tour:
        walk = euler_walk(g, tour, 0)
        diagnostics["walk"] = [[g.edge(eid).tail, g.edge(eid).head]
                               for eid in walk]
    elif ok:
        diagnostics["walk"] = []
    return ok, diagnostics


@dataclass
class RunReport:
    """Machine-readable result of one pipeline run."""

    instance: str
    n: int
    epsilon: Fraction
    lp_value: Fraction
    tour_cost: Fraction
    ratio: Fraction
    tour_walk: list[list[int]]
    assertion_counts: dict[str, int]
    held_karp: Optional[Fraction] = None
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "instance": self.instance,
            "n": self.n,
            "epsilon": format_rational(self.epsilon),
            "lp_value": format_rational(self.lp_value),
            "tour_cost": format_rational(self.tour_cost),
            "ratio": format_rational(self.ratio),
            "tour_walk": self.tour_walk,
            "assertion_counts": self.assertion_counts,
        }
        if self.held_karp is not None:
            doc["held_karp_opt"] = format_rational(self.held_karp)
        doc["timings"] = self.timings
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def run_pipeline(name: str, g: Digraph, epsilon: Fraction,
                 with_oracle: bool = False,
                 check_all: bool = True) -> RunReport:
    """Solve, verify, optionally compare against the Held-Karp oracle, and
    assemble the report.  All sandwich inequalities are exact."""
    checker = Checker(check_all=check_all)
    epsilon = Fraction(epsilon)
    timings: dict[str, float] = {}
    start = time.perf_counter()
    cert = solve_atsp(g, epsilon, checker)
    timings["solve_s"] = time.perf_counter() - start
    start = time.perf_counter()
    ok, diagnostics = verify_tour(g, cert.tour)
    timings["verify_s"] = time.perf_counter() - start
    checker.check(ok, "pipeline-tour-verified", lambda: diagnostics)
    held = None
    if with_oracle:
        start = time.perf_counter()
        held = held_karp_opt(g)
        timings["oracle_s"] = time.perf_counter() - start
        checker.check(cert.lp_value <= held, "oracle-above-lp",
                      lambda: f"{held} < {cert.lp_value}")
        checker.check(held <= cert.cost, "oracle-below-tour",
                      lambda: f"{held} > {cert.cost}")
    return RunReport(
        instance=name,
        n=g.n,
        epsilon=epsilon,
        lp_value=cert.lp_value,
        tour_cost=cert.cost,
        ratio=cert.ratio,
        tour_walk=[[g.edge(eid).tail, g.edge(eid).head] for eid in cert.walk],
        assertion_counts=checker.as_dict(),
        held_karp=held,
        timings=timings,
    )
