"""Vertebrate pairs: a strongly laminar instance plus a backbone subtour.

The backbone is a connected Eulerian multi-subgraph touching every
non-singleton family set.  An edgeless backbone is legal and sits on one
designated vertex, which is why the vertex set is stored explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .checks import Checker
from .errors import ContractViolation
from .graph import EdgeMultiset, is_eulerian_connected
from .instance import StronglyLaminarInstance

ZERO = Fraction(0)


@dataclass(frozen=True)
class VertebratePair:
    instance: StronglyLaminarInstance
    backbone: EdgeMultiset
    backbone_vertices: frozenset

    def validate(self, checker: Optional[Checker] = None) -> None:
        checker = checker or Checker()
        inst = self.instance
        g = inst.g
        if self.backbone:
            eulerian, comps = is_eulerian_connected(g, self.backbone)
            checker.check(eulerian, "backbone-eulerian")
            touched = self.backbone.vertices(g)
            comp = next(c for c in comps if touched & c)
            checker.check(touched <= comp, "backbone-connected")
            checker.check(self.backbone_vertices == touched, "backbone-vertex-set")
        else:
            if len(self.backbone_vertices) != 1:
                raise ContractViolation(
                    "an edgeless backbone must sit on exactly one vertex"
                )
        for s in inst.family.nonsingletons():
            checker.check(bool(self.backbone_vertices & s),
                          "backbone-touches-nonsingleton",
                          lambda: sorted(s))

    def outside_vertices(self) -> frozenset:
        return self.instance.ground - self.backbone_vertices

    def outside_singleton_mass(self) -> Fraction:
        """sum of 2 y_v over vertices outside the backbone."""
        return sum(
            (2 * self.instance.y_vertex(v) for v in self.outside_vertices()), ZERO
        )
