"""Runtime verification of the guarantees the algorithm relies on.

Every stage of the pipeline re-checks its exact invariants (tight cuts,
cost bounds, flow properties, ...) through a :class:`Checker`.  Checks are
counted by label so a run can report how many assertions were exercised,
and a violation raises :class:`InternalCheckError` with a diagnostic
payload instead of silently producing a bad tour.
"""

from __future__ import annotations

from collections import Counter
from typing import Any, Callable

from .errors import InternalCheckError


class Checker:
    """Counts labelled runtime checks and raises on violation.

    ``check_all`` gates the expensive re-validations (full instance
    re-checks on contracted instances, separation-certified feasibility);
    the cheap inequality checks always run.
    """

    def __init__(self, check_all: bool = True):
        self.check_all = check_all
        self.counters: Counter[str] = Counter()
        self.failures: list[str] = []

    def check(self, cond: bool, label: str, detail: Any = None) -> None:
        self.counters[label] += 1
        if not cond:
            self.failures.append(label)
            if callable(detail):
                detail = detail()
            raise InternalCheckError(label, detail)

    def expensive(self, cond_fn: Callable[[], bool], label: str, detail: Any = None) -> None:
        """Run a costly check only when check_all is enabled."""
        if self.check_all:
            self.check(cond_fn(), label, detail)

    def merge(self, other: "Checker") -> None:
        self.counters.update(other.counters)
        self.failures.extend(other.failures)

    def as_dict(self) -> dict[str, int]:
        return dict(sorted(self.counters.items()))
