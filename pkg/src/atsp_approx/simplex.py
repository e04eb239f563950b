"""Exact two-phase primal simplex over the rationals, with variable bounds.

Solves  min c.x  s.t.  A_i.x {<=,==,>=} b_i,  l <= x <= u  in exact Fraction
arithmetic and reports row duals, which downstream code turns into the
(a, y) dual solution of the subtour-elimination LP.  Bounded variables are
handled natively (nonbasic at lower or upper bound) so flow-style LPs do not
need a constraint row per capacity.

Pivoting uses Dantzig's rule with an automatic switch to Bland's rule after
a run of degenerate pivots, which guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import ContractViolation, InternalCheckError

ZERO = Fraction(0)
ONE = Fraction(1)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2

_DEGENERATE_STREAK_LIMIT = 64


@dataclass
class LpResult:
    status: str
    x: list[Fraction]
    objective: Fraction
    duals: list[Fraction]


def solve_lp(
    objective: Sequence[Fraction],
    rows: Sequence[dict[int, Fraction]],
    senses: Sequence[str],
    rhs: Sequence[Fraction],
    lower: Optional[Sequence[Fraction]] = None,
    upper: Optional[Sequence[Optional[Fraction]]] = None,
) -> LpResult:
    """Solve the LP exactly; rows are sparse {var: coeff} maps.

    Duals follow the convention that at optimality the reduced cost
    c_j - sum_i duals[i]*A[i][j] is nonnegative for every variable at its
    lower bound; '>=' rows therefore get nonnegative duals and '<=' rows
    nonpositive ones.
    """
    nvars = len(objective)
    nrows = len(rows)
    if not (len(senses) == len(rhs) == nrows):
        raise ContractViolation("rows/senses/rhs length mismatch")
    lo = [Fraction(v) for v in (lower if lower is not None else [ZERO] * nvars)]
    up: list[Optional[Fraction]] = list(upper) if upper is not None else [None] * nvars
    if len(lo) != nvars or len(up) != nvars:
        raise ContractViolation("bounds length mismatch")
    for j in range(nvars):
        if up[j] is not None and Fraction(up[j]) < lo[j]:
            return LpResult(INFEASIBLE, [], ZERO, [])

    # Shift variables to lower bound zero; fold the shift into rhs/objective.
    const = ZERO
    shifted_rhs = [Fraction(v) for v in rhs]
    for j in range(nvars):
        if lo[j]:
            const += Fraction(objective[j]) * lo[j]
            for i in range(nrows):
                coeff = rows[i].get(j)
                if coeff:
                    shifted_rhs[i] -= Fraction(coeff) * lo[j]
    bounds: list[Optional[Fraction]] = [
        None if up[j] is None else Fraction(up[j]) - lo[j] for j in range(nvars)
    ]

    # Append slack/surplus columns, then one artificial per row.
    ncols = nvars
    slack_col: list[Optional[int]] = [None] * nrows
    slack_sign: list[int] = [0] * nrows
    for i, sense in enumerate(senses):
        if sense == "<=":
            slack_col[i], slack_sign[i] = ncols, 1
            ncols += 1
        elif sense == ">=":
            slack_col[i], slack_sign[i] = ncols, -1
            ncols += 1
        elif sense != "==":
            raise ContractViolation(f"unknown sense {sense!r}")
    art_col = list(range(ncols, ncols + nrows))
    art_sign = [1 if shifted_rhs[i] >= 0 else -1 for i in range(nrows)]
    ncols += nrows

    bounds = bounds + [None] * (ncols - nvars)
    tableau: list[list[Fraction]] = []
    for i in range(nrows):
        row = [ZERO] * ncols
        for j, coeff in rows[i].items():
            if not (0 <= j < nvars):
                raise ContractViolation(f"row references unknown variable {j}")
            row[j] = Fraction(coeff)
        if slack_col[i] is not None:
            row[slack_col[i]] = Fraction(slack_sign[i])
        row[art_col[i]] = Fraction(art_sign[i])
        if art_sign[i] < 0:
            row = [-v for v in row]
            row[art_col[i]] = ONE
            tableau.append(row)
            shifted_rhs[i] = -shifted_rhs[i]
        else:
            tableau.append(row)
    beta = list(shifted_rhs)  # basic values; artificials start basic
    basis = list(art_col)
    state = [_AT_LOWER] * ncols
    for j in basis:
        state[j] = _BASIC
    banned = [False] * ncols

    def run_phase(cost: list[Fraction]) -> tuple[str, list[Fraction]]:
        zrow = list(cost)
        for r in range(nrows):
            cb = cost[basis[r]]
            if cb:
                trow = tableau[r]
                for j in range(ncols):
                    if trow[j]:
                        zrow[j] -= cb * trow[j]
        streak = 0
        pivots = 0
        pivot_cap = 50000 + 500 * (nrows + ncols)
        while True:
            pivots += 1
            if pivots > pivot_cap:
                raise InternalCheckError("simplex-pivot-cap", f"{pivots} pivots")
            use_bland = streak > _DEGENERATE_STREAK_LIMIT
            enter = -1
            best = ZERO
            for j in range(ncols):
                if state[j] == _BASIC or banned[j]:
                    continue
                rc = zrow[j]
                score = -rc if state[j] == _AT_LOWER else rc
                if score > 0:
                    if use_bland:
                        enter = j
                        break
                    if score > best:
                        best, enter = score, j
            if enter < 0:
                return OPTIMAL, zrow
            from_upper = state[enter] == _AT_UPPER
            # Ratio test: limit on step t >= 0 for the entering variable.
            limit: Optional[Fraction] = bounds[enter]
            leave_row = -1
            leave_to_upper = False
            for i in range(nrows):
                a = tableau[i][enter]
                if from_upper:
                    a = -a
                if a > 0:
                    t = beta[i] / a
                    hit_upper = False
                elif a < 0:
                    ub = bounds[basis[i]]
                    if ub is None:
                        continue
                    t = (ub - beta[i]) / (-a)
                    hit_upper = True
                else:
                    continue
                if limit is None or t < limit or (
                    t == limit and leave_row >= 0 and basis[i] < basis[leave_row]
                ):
                    limit = t
                    leave_row = i
                    leave_to_upper = hit_upper
            if limit is None:
                return UNBOUNDED, zrow
            t = limit
            if t > 0:
                streak = 0
            else:
                streak += 1
            # Update basic values along the direction.
            if t:
                for i in range(nrows):
                    a = tableau[i][enter]
                    if a:
                        beta[i] += (a * t) if from_upper else (-a * t)
            if leave_row < 0:
                # bound flip, no basis change
                state[enter] = _AT_LOWER if from_upper else _AT_UPPER
                continue
            leaving = basis[leave_row]
            state[leaving] = _AT_UPPER if leave_to_upper else _AT_LOWER
            # entering variable's new value
            enter_val = (bounds[enter] - t) if from_upper else t
            basis[leave_row] = enter
            state[enter] = _BASIC
            beta[leave_row] = enter_val
            prow = tableau[leave_row]
            pivot = prow[enter]
            if pivot != ONE:
                inv = ONE / pivot
                tableau[leave_row] = prow = [v * inv for v in prow]
            for i in range(nrows):
                if i == leave_row:
                    continue
                f = tableau[i][enter]
                if f:
                    trow = tableau[i]
                    tableau[i] = [v - f * p for v, p in zip(trow, prow)]
            f = zrow[enter]
            if f:
                zrow = [v - f * p for v, p in zip(zrow, prow)]

    # Phase 1: minimize the artificial mass.
    phase1_cost = [ZERO] * ncols
    for j in art_col:
        phase1_cost[j] = ONE
    status, _ = run_phase(phase1_cost)
    if status != OPTIMAL:
        raise InternalCheckError("simplex-phase1", "phase 1 cannot be unbounded")
    art_set = set(art_col)
    infeas = sum((beta[i] for i in range(nrows) if basis[i] in art_set), ZERO)
    if infeas > 0:
        return LpResult(INFEASIBLE, [], ZERO, [])
    # Drive basic artificials out where possible; redundant rows keep a
    # zero-valued basic artificial whose row is all-zero on real columns.
    for r in range(nrows):
        if basis[r] not in art_set:
            continue
        prow = tableau[r]
        piv_col = next(
            (j for j in range(ncols) if j not in art_set and state[j] != _BASIC and prow[j]),
            None,
        )
        if piv_col is None:
            continue
        pivot = prow[piv_col]
        old = basis[r]
        state[old] = _AT_LOWER
        basis[r] = piv_col
        # degenerate pivot: the point does not move, so the new basic
        # variable keeps its current (bound) value
        beta[r] = bounds[piv_col] if state[piv_col] == _AT_UPPER else ZERO
        state[piv_col] = _BASIC
        if pivot != ONE:
            inv = ONE / pivot
            tableau[r] = prow = [v * inv for v in prow]
        for i in range(nrows):
            if i != r and tableau[i][piv_col]:
                f = tableau[i][piv_col]
                trow = tableau[i]
                tableau[i] = [v - f * p for v, p in zip(trow, prow)]
    for j in art_col:
        banned[j] = True

    # Phase 2: the real objective.
    phase2_cost = [ZERO] * ncols
    for j in range(nvars):
        phase2_cost[j] = Fraction(objective[j])
    status, zrow = run_phase(phase2_cost)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, [], ZERO, [])

    x = [ZERO] * ncols
    for j in range(ncols):
        if state[j] == _AT_UPPER:
            x[j] = bounds[j]
    for r in range(nrows):
        x[basis[r]] = beta[r]
    solution = [x[j] + lo[j] for j in range(nvars)]
    obj = sum((Fraction(objective[j]) * solution[j] for j in range(nvars)), ZERO)
    # Row duals from the reduced costs of the artificial columns: the
    # artificial for row i has column sigma_i * e_i, so its reduced cost is
    # -sigma_i * y_i.
    duals = [-zrow[art_col[i]] * art_sign[i] for i in range(nrows)]
    return LpResult(OPTIMAL, solution, obj, duals)
