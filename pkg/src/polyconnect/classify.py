"""Basis-split categorization of connection vertices and the s-range.

Parallel vertices split their basic variables as (m1, 0, m2-1),
(m1-1, 1, m2-1) or (m1-1, 0, m2) over the blocks (x, s, y); series
vertices as (m1, 0, m2), (m1, 1, m2-1) or (m1-1, 1, m2). The categories
are named P1..P3 and S1..S3 in that order.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .connect import ConnectionInstance
from .exactlin import Matrix, Vec, rank
from .polytope import (EmptyPolyhedronError, InputError, StdPolyhedron,
                       VertexRecord, enumerate_vertices)
from .simplex import solve_lp


class ClassifyError(ValueError):
    pass


class DegenerateVertexError(ClassifyError):
    """The vertex has several bases and no unambiguous category; perturb first."""


class CategoryViolationError(ClassifyError):
    """A split outside the allowed category set: an invariant violation."""


@dataclass(frozen=True)
class BasisSplit:
    x_count: int
    s_basic: int
    y_count: int
    category: str
    overlap: bool = False


def _is_vertex(P: StdPolyhedron, point: Sequence[Fraction]) -> bool:
    """point is a vertex iff it is feasible and its support columns are independent."""
    point = tuple(point)
    if len(point) != P.n or any(v < 0 for v in point):
        return False
    if P.A.mul_vec(point) != tuple(P.b):
        return False
    support = [j for j, v in enumerate(point) if v != 0]
    return rank(P.A.submatrix(range(P.m), support)) == len(support)


def _blocks(inst: ConnectionInstance, v: VertexRecord) -> tuple[Vec, Fraction, Vec]:
    x = tuple(v.coords[i] for i in inst.split.x_indices)
    s = v.coords[inst.split.s_index]
    y = tuple(v.coords[i] for i in inst.split.y_indices)
    return x, s, y


def _split_from_basis(inst: ConnectionInstance, basis: Sequence[int]) -> tuple[int, int, int]:
    xs = set(inst.split.x_indices)
    ys = set(inst.split.y_indices)
    x_count = sum(1 for j in basis if j in xs)
    s_basic = 1 if inst.split.s_index in basis else 0
    y_count = sum(1 for j in basis if j in ys)
    return x_count, s_basic, y_count


def classify_vertex(inst: ConnectionInstance, v: VertexRecord) -> BasisSplit:
    """Categorize one vertex of a connection polyhedron.

    With a unique basis the split is counted directly. A degenerate series
    vertex with s = 0 can still be categorized through the geometric test
    of category S1; any other degenerate vertex is rejected so that the
    caller perturbs first.
    """
    if inst.kind == "cartesian":
        raise InputError("cartesian instances have no basis-split categories")
    m1, m2 = inst.m1, inst.m2
    if inst.kind == "parallel":
        allowed = {(m1, 0, m2 - 1): "P1", (m1 - 1, 1, m2 - 1): "P2",
                   (m1 - 1, 0, m2): "P3"}
    else:
        allowed = {(m1, 0, m2): "S1", (m1, 1, m2 - 1): "S2",
                   (m1 - 1, 1, m2): "S3"}

    if len(v.bases) != 1:
        if inst.kind == "series":
            return _classify_degenerate_series(inst, v, allowed)
        raise DegenerateVertexError(
            f"vertex {v.coords} has {len(v.bases)} bases; perturb first")

    split = _split_from_basis(inst, v.bases[0])
    if split not in allowed:
        raise CategoryViolationError(
            f"split {split} outside the allowed set for {inst.kind}")
    return BasisSplit(*split, allowed[split])


def _classify_degenerate_series(inst: ConnectionInstance, v: VertexRecord,
                                allowed: dict[tuple[int, int, int], str]) -> BasisSplit:
    x, s, y = _blocks(inst, v)
    Q = inst.q_polyhedron()
    R = inst.r_polyhedron()
    candidates: list[tuple[tuple[int, int, int], str, bool]] = []
    if s == 0 and _is_vertex(Q, x + (Fraction(0),)) and _is_vertex(R, (Fraction(0),) + y):
        candidates.append(((inst.m1, 0, inst.m2), "S1", False))
    if s > 0:
        in_q = _is_vertex(Q, x + (s,))
        in_r = _is_vertex(R, (s,) + y)
        if in_r and not in_q:
            candidates.append(((inst.m1, 1, inst.m2 - 1), "S2", False))
        elif in_q and not in_r:
            candidates.append(((inst.m1 - 1, 1, inst.m2), "S3", False))
        elif in_q and in_r:
            # ambiguous overlap: recorded as S2 with the flag set
            candidates.append(((inst.m1, 1, inst.m2 - 1), "S2", True))
    if len(candidates) != 1:
        raise DegenerateVertexError(
            f"vertex {v.coords} has {len(v.bases)} bases; perturb first")
    split, name, overlap = candidates[0]
    return BasisSplit(*split, name, overlap)


@dataclass(frozen=True)
class SRange:
    """Extrema of the shared variable over Q, R, and their intersection.

    None in a max field is the +infinity marker; minima are always finite
    for nonempty factors because s >= 0.
    """

    s_min_q: Fraction
    s_max_q: Fraction | None
    s_min_r: Fraction
    s_max_r: Fraction | None
    s_min: Fraction
    s_max: Fraction | None
    s_diff: Fraction | None

    @property
    def empty(self) -> bool:
        return self.s_max is not None and self.s_max < self.s_min


def _coordinate_extrema(P: StdPolyhedron, index: int) -> tuple[Fraction, Fraction | None]:
    c = tuple(Fraction(1 if j == index else 0) for j in range(P.n))
    low = solve_lp(P.A, P.b, c, sense="min")
    if low.status == "infeasible":
        raise EmptyPolyhedronError("factor polyhedron is empty")
    if low.status == "unbounded":
        raise InputError("coordinate unbounded below despite nonnegativity")
    high = solve_lp(P.A, P.b, c, sense="max")
    high_val = None if high.status == "unbounded" else high.objective
    return low.objective, high_val


def s_range(inst: ConnectionInstance) -> SRange:
    """Exact LP extrema of s over both factors, combined per the interval law."""
    if inst.kind not in ("series", "cartesian"):
        raise InputError("s_range applies to series instances")
    Q = inst.q_polyhedron()
    R = inst.r_polyhedron()
    s_min_q, s_max_q = _coordinate_extrema(Q, Q.n - 1)
    s_min_r, s_max_r = _coordinate_extrema(R, 0)
    s_min = max(s_min_q, s_min_r)
    if s_max_q is None:
        s_max = s_max_r
    elif s_max_r is None:
        s_max = s_max_q
    else:
        s_max = min(s_max_q, s_max_r)
    s_diff = None if s_max is None else s_max - s_min
    return SRange(s_min_q, s_max_q, s_min_r, s_max_r, s_min, s_max, s_diff)


def integrality_check(P: StdPolyhedron) -> bool:
    """True iff every vertex coordinate is an integer (vacuously on empty)."""
    return all(v.denominator == 1
               for rec in enumerate_vertices(P) for v in rec.coords)
