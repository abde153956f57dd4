"""Exact primal simplex with Bland's anti-cycling rule.

Drives feasibility tests, coordinate optimization, and pivot-walk
extraction elsewhere in the package. Fully deterministic: the entering
variable is the lowest index with a negative reduced cost, the leaving
variable is the lowest-index basic variable among the minimum ratios.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exactlin import ExactLinError, Matrix, Vec, dot, solve_square


class PivotLimitError(RuntimeError):
    """Pivot budget exhausted; indicates a bug since Bland cannot cycle."""


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "unbounded" | "infeasible"
    x: Vec | None
    objective: Fraction | None
    basis: tuple[int, ...] | None
    path: tuple[Vec, ...] = ()
    ray: Vec | None = None


def _basis_solution(A: Matrix, b: Sequence[Fraction], basis: Sequence[int]) -> list[Fraction]:
    sub = A.submatrix(range(A.rows), basis)
    sol = solve_square(sub, b)
    if sol is None:
        raise ExactLinError("basis became singular during pivoting")
    return list(sol)


def _full_point(n: int, basis: Sequence[int], xb: Sequence[Fraction]) -> Vec:
    x = [Fraction(0)] * n
    for j, value in zip(basis, xb):
        x[j] = value
    return tuple(x)


def _phase2(A: Matrix, b: Vec, c: Vec, basis: list[int], trace: bool,
            max_pivots: int) -> LPResult:
    m, n = A.rows, A.cols
    xb = _basis_solution(A, b, basis)
    if any(v < 0 for v in xb):
        raise ExactLinError("starting basis is not feasible")
    path: list[Vec] = [_full_point(n, basis, xb)] if trace else []

    for _ in range(max_pivots):
        sub_t = A.submatrix(range(m), basis).transpose()
        y = solve_square(sub_t, tuple(c[j] for j in basis))
        if y is None:
            raise ExactLinError("basis became singular during pivoting")
        entering = -1
        for j in range(n):
            if j in basis:
                continue
            reduced = c[j] - dot(y, A.col(j))
            if reduced < 0:
                entering = j
                break
        if entering < 0:
            obj = sum((c[j] * v for j, v in zip(basis, xb)), Fraction(0))
            return LPResult("optimal", _full_point(n, basis, xb), obj,
                            tuple(basis), tuple(path))

        d = _basis_solution(A, A.col(entering), basis)
        t_best: Fraction | None = None
        leave_pos = -1
        for pos in range(m):
            if d[pos] > 0:
                ratio = xb[pos] / d[pos]
                if t_best is None or ratio < t_best or (
                        ratio == t_best and basis[pos] < basis[leave_pos]):
                    t_best = ratio
                    leave_pos = pos
        if t_best is None:
            ray = [Fraction(0)] * n
            ray[entering] = Fraction(1)
            for pos in range(m):
                ray[basis[pos]] = -d[pos]
            return LPResult("unbounded", _full_point(n, basis, xb), None,
                            tuple(basis), tuple(path), ray=tuple(ray))

        basis[leave_pos] = entering
        basis.sort()
        xb = _basis_solution(A, b, basis)
        if trace:
            point = _full_point(n, basis, xb)
            if not path or point != path[-1]:
                path.append(point)
    raise PivotLimitError("pivot budget exceeded")


def find_feasible_basis(A: Matrix, b: Vec, max_pivots: int = 100_000) -> tuple[int, ...] | None:
    """Phase-1 simplex; returns a feasible basis of (A, b) or None."""
    m, n = A.rows, A.cols
    rows = []
    rhs = []
    for i in range(m):
        row = list(A.row(i))
        if b[i] < 0:
            rows.append([-x for x in row])
            rhs.append(-b[i])
        else:
            rows.append(row)
            rhs.append(b[i])
    # append artificial identity block
    for i in range(m):
        rows[i].extend(Fraction(1 if k == i else 0) for k in range(m))
    ext = Matrix.from_rows(rows)
    c1 = tuple([Fraction(0)] * n + [Fraction(1)] * m)
    basis = list(range(n, n + m))
    result = _phase2(ext, tuple(rhs), c1, basis, trace=False, max_pivots=max_pivots)
    if result.status != "optimal" or result.objective != 0:
        return None
    basis = list(result.basis or ())
    # drive leftover artificials out with degenerate pivots
    for pos in range(m):
        if basis[pos] < n:
            continue
        replaced = False
        for j in range(n):
            if j in basis:
                continue
            trial = sorted(basis[:pos] + [j] + basis[pos + 1 :])
            if solve_square(ext.submatrix(range(m), trial), tuple(rhs)) is not None:
                basis[pos] = j
                replaced = True
                break
        if not replaced:
            return None  # redundant row; cannot happen for full-row-rank A
    basis.sort()
    return tuple(basis)


def solve_lp(A: Matrix, b: Vec, c: Vec, sense: str = "min",
             start_basis: Sequence[int] | None = None, trace: bool = False,
             max_pivots: int = 100_000) -> LPResult:
    """Solve min/max c.x over {x : Ax = b, x >= 0} exactly."""
    if sense not in ("min", "max"):
        raise ExactLinError("sense must be 'min' or 'max'")
    cost = tuple(-v for v in c) if sense == "max" else tuple(c)
    if start_basis is None:
        feasible = find_feasible_basis(A, b, max_pivots=max_pivots)
        if feasible is None:
            return LPResult("infeasible", None, None, None)
        basis = list(feasible)
    else:
        basis = sorted(start_basis)
    result = _phase2(A, b, cost, basis, trace=trace, max_pivots=max_pivots)
    if sense == "max" and result.status == "optimal" and result.objective is not None:
        return LPResult("optimal", result.x, -result.objective, result.basis, result.path)
    return result
