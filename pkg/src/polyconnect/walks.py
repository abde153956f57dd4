"""Constructive edge walks on connection polyhedra.

parallel_walk dispatches on the basis splits of its endpoints and an
inequality between the link-row values, builds the walk out of at most two
preliminary steps plus two lifted face walks, and reports the matching case
row together with an instantiated bound. series_walk lifts a walk from the
left factor step by step, correcting failed lifts inside the preimage of
the traversed edge, and splicing through the face where the shared variable
is maximal when the lifted walk overshoots it.

All bounds reported here are instantiated with quantities measured on the
concrete instance (sub-walk lengths, factor diameters, s-bounded
diameters), never with unmeasurable suprema.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .classify import (BasisSplit, DegenerateVertexError, SRange,
                       classify_vertex, s_range)
from .connect import ConnectionInstance, mirror_series_instance
from .exactlin import Vec, dot, format_rat, vector
from .polytope import (InputError, Skeleton, StdPolyhedron, build_skeleton,
                       diameter, enumerate_vertices, shortest_path)
from .simplex import solve_lp

NONREVISIT_MAX_COLS = 20
NONREVISIT_STATE_CAP = 4_000_000


class WalkError(ValueError):
    pass


class NonSimpleError(WalkError):
    """Degenerate instance; perturb the right-hand side first."""


class LiftFailedError(WalkError):
    def __init__(self, index: int, message: str) -> None:
        super().__init__(f"lift failed at step {index}: {message}")
        self.index = index


class StateCapError(WalkError):
    """State-space guardrail exceeded; the answer is unknown."""


class UnboundedObjectiveError(WalkError):
    def __init__(self, ray: Vec) -> None:
        super().__init__("objective unbounded along a feasible ray")
        self.ray = ray


class WalkConstructionError(WalkError):
    """The constructive recipe hit a situation it proves cannot happen."""


@dataclass(frozen=True)
class WalkRecord:
    vertex_indices: tuple[int, ...]
    case_label: str
    claimed_bound: int | None

    @property
    def length(self) -> int:
        return len(self.vertex_indices) - 1

    def reversed(self) -> "WalkRecord":
        return WalkRecord(tuple(reversed(self.vertex_indices)),
                          self.case_label, self.claimed_bound)


def verify_walk(skel: Skeleton, record: WalkRecord,
                start: int | None = None, end: int | None = None) -> bool:
    seq = record.vertex_indices
    if not seq:
        return False
    if start is not None and seq[0] != start:
        return False
    if end is not None and seq[-1] != end:
        return False
    return all(b in skel.neighbors(a) for a, b in zip(seq, seq[1:]))


def walk_to_json(skel: Skeleton, record: WalkRecord) -> str:
    import json

    payload = {
        "case": record.case_label,
        "claimedBound": record.claimed_bound,
        "length": record.length,
        "vertices": [[format_rat(x) for x in skel.vertices[i].coords]
                     for i in record.vertex_indices],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# parallel connection walks


@dataclass
class ParallelAnalysis:
    """Enumerated, classified parallel instance shared across walk queries."""

    inst: ConnectionInstance
    skeleton: Skeleton
    splits: tuple[BasisSplit, ...]

    @classmethod
    def build(cls, inst: ConnectionInstance) -> "ParallelAnalysis":
        if inst.kind != "parallel":
            raise InputError("parallel analysis needs a parallel instance")
        assert inst.poly is not None
        verts = enumerate_vertices(inst.poly)
        if not all(v.is_nondegenerate(inst.poly.m) for v in verts):
            raise NonSimpleError("instance is degenerate; perturb first")
        skel = build_skeleton(inst.poly, verts)
        splits = tuple(classify_vertex(inst, v) for v in verts)
        return cls(inst, skel, splits)

    def coords(self, i: int) -> Vec:
        return self.skeleton.vertices[i].coords

    def x_of(self, i: int) -> Vec:
        return tuple(self.coords(i)[k] for k in self.inst.split.x_indices)

    def s_of(self, i: int) -> Fraction:
        return self.coords(i)[self.inst.split.s_index]

    def y_of(self, i: int) -> Vec:
        return tuple(self.coords(i)[k] for k in self.inst.split.y_indices)

    @cached_property
    def a_dot(self) -> tuple[Fraction, ...]:
        a = self.inst.abar.link_row
        return tuple(dot(a, self.x_of(i)) for i in range(len(self.skeleton.vertices)))

    @cached_property
    def b_dot(self) -> tuple[Fraction, ...]:
        b = self.inst.bbar.link_row
        return tuple(dot(b, self.y_of(i)) for i in range(len(self.skeleton.vertices)))


def lift_walk(inst: ConnectionInstance, walk_in_q: Sequence[Sequence[Fraction]],
              y_fixed: Sequence[Fraction], *, skeleton: Skeleton | None = None) -> WalkRecord:
    """Lift a walk of Q(t) vertices into the parallel connection with y fixed.

    Each lifted point must be a vertex and consecutive lifted points must be
    adjacent; the first failure raises LiftFailedError with its index.
    """
    if inst.kind != "parallel":
        raise InputError("lift_walk applies to parallel instances")
    assert inst.poly is not None
    y = vector(y_fixed)
    if len(y) != inst.n2 - 1:
        raise InputError("y_fixed has the wrong length")
    if sum(1 for v in y if v != 0) != inst.m2 - 1:
        raise InputError("y_fixed must have exactly m2 - 1 basic variables")
    B = inst.bbar.inner
    if any(v < 0 for v in y) or B.mul_vec(y) != tuple(inst.c_B):
        raise InputError("y_fixed is not feasible for the y-block")
    if not walk_in_q:
        raise InputError("empty walk")
    skel = skeleton if skeleton is not None else build_skeleton(inst.poly)
    indices: list[int] = []
    for k, q in enumerate(walk_in_q):
        point = vector(q) + y
        idx = skel.coord_index.get(point)
        if idx is None:
            raise LiftFailedError(k, f"{point} is not a vertex")
        indices.append(idx)
    for k in range(len(indices) - 1):
        if indices[k + 1] not in skel.neighbors(indices[k]):
            raise LiftFailedError(k + 1, "lifted points are not adjacent")
    return WalkRecord(tuple(indices), "lift", None)


def _face_path(an: ParallelAnalysis, fixed: dict[int, Fraction],
               i: int, j: int) -> list[int]:
    """Shortest path inside the face where the given coordinates are pinned."""
    allowed = [k for k in range(len(an.skeleton.vertices))
               if all(an.coords(k)[idx] == val for idx, val in fixed.items())]
    path = shortest_path(an.skeleton, i, j, allowed=allowed)
    if path is None:
        raise WalkConstructionError("face walk not found; face should be connected")
    return path


def _nbnb_first(an: ParallelAnalysis, i: int, j: int) -> tuple[list[int], int, int]:
    """Walk i -> (x_j, s', y_i) -> j through two lifted face walks.

    Requires y_i with m2-1 basic variables, x_j with m1-1, and
    a.x_j <= a.x_i + s_i, which makes the intermediate point feasible.
    Returns (path, lifted x-side length, lifted y-side length).
    """
    inst = an.inst
    if an.splits[i].y_count != inst.m2 - 1 or an.splits[j].x_count != inst.m1 - 1:
        raise WalkConstructionError("endpoint splits violate the walk hypotheses")
    if an.a_dot[j] > an.a_dot[i] + an.s_of(i):
        raise WalkConstructionError("link-row inequality violated")
    total = inst.c_a + inst.c_b
    s_mid = total - an.a_dot[j] - an.b_dot[i]
    mid_coords = an.x_of(j) + (s_mid,) + an.y_of(i)
    mid = an.skeleton.coord_index.get(mid_coords)
    if mid is None:
        raise WalkConstructionError(f"intermediate point {mid_coords} is not a vertex")
    y_fix = {idx: an.coords(i)[idx] for idx in inst.split.y_indices}
    x_fix = {idx: mid_coords[k] for k, idx in enumerate(inst.split.x_indices)}
    first = _face_path(an, y_fix, i, mid)
    second = _face_path(an, x_fix, mid, j)
    return first[:-1] + second, len(first) - 1, len(second) - 1


def _corollary(an: ParallelAnalysis, i: int, j: int) -> tuple[list[int], int, int]:
    """Both endpoints s-basic: one of the two inequality orientations holds."""
    if an.a_dot[j] <= an.a_dot[i] + an.s_of(i):
        return _nbnb_first(an, i, j)
    path, lq, lr = _nbnb_first(an, j, i)
    return path[::-1], lq, lr


def _s_basic_neighbor(an: ParallelAnalysis, i: int) -> int:
    """The unique neighbor along the edge that increases the shared variable."""
    candidates = [w for w in an.skeleton.neighbors(i) if an.s_of(w) > 0]
    if not candidates:
        raise WalkConstructionError(
            "no s-basic neighbor; the s-increasing edge is an unbounded ray")
    return min(candidates, key=an.coords)


def parallel_walk(inst: ConnectionInstance, u: int, v: int, *,
                  analysis: ParallelAnalysis | None = None) -> WalkRecord:
    """Constructed walk between two vertices, labeled by its case row.

    The claimed bound is the row's additive constant plus the lengths of the
    two lifted face walks actually used.
    """
    an = analysis if analysis is not None else ParallelAnalysis.build(inst)
    if u == v:
        raise InputError("endpoints must differ")
    cu, cv = an.splits[u].category, an.splits[v].category

    if (cu, cv) in (("P1", "P2"), ("P3", "P2")):
        rec = parallel_walk(inst, v, u, analysis=an)
        return WalkRecord(tuple(reversed(rec.vertex_indices)),
                          rec.case_label, rec.claimed_bound)

    ax_u, ax_v = an.a_dot[u], an.a_dot[v]
    if (cu, cv) == ("P2", "P2"):
        path, lq, lr = _corollary(an, u, v)
        return _finish(an, path, "P2-P2", lq + lr + 0, u, v)

    if (cu, cv) == ("P2", "P1"):
        if ax_u <= ax_v:
            path, lq, lr = _nbnb_first(an, v, u)
            return _finish(an, path[::-1], "P2-P1/le", lq + lr, u, v)
        w = _s_basic_neighbor(an, v)
        path, lq, lr = _corollary(an, u, w)
        return _finish(an, path + [v], "P2-P1/gt", lq + lr + 1, u, v)

    if (cu, cv) == ("P2", "P3"):
        if ax_u >= ax_v:
            path, lq, lr = _nbnb_first(an, u, v)
            return _finish(an, path, "P2-P3/ge", lq + lr, u, v)
        w = _s_basic_neighbor(an, v)
        path, lq, lr = _corollary(an, u, w)
        return _finish(an, path + [v], "P2-P3/lt", lq + lr + 1, u, v)

    if (cu, cv) == ("P1", "P1"):
        if an.b_dot[u] >= an.b_dot[v]:
            w = _s_basic_neighbor(an, u)
            path, lq, lr = _nbnb_first(an, v, w)
            return _finish(an, [u] + path[::-1], "P1-P1", lq + lr + 1, u, v)
        w = _s_basic_neighbor(an, v)
        path, lq, lr = _nbnb_first(an, u, w)
        return _finish(an, path + [v], "P1-P1", lq + lr + 1, u, v)

    if (cu, cv) == ("P3", "P3"):
        if ax_u >= ax_v:
            w = _s_basic_neighbor(an, u)
            path, lq, lr = _nbnb_first(an, w, v)
            return _finish(an, [u] + path, "P3-P3", lq + lr + 1, u, v)
        w = _s_basic_neighbor(an, v)
        path, lq, lr = _nbnb_first(an, w, u)
        return _finish(an, path[::-1] + [v], "P3-P3", lq + lr + 1, u, v)

    if (cu, cv) == ("P1", "P3"):
        if ax_u >= ax_v:
            path, lq, lr = _nbnb_first(an, u, v)
            return _finish(an, path, "P1-P3/ge", lq + lr, u, v)
        w1 = _s_basic_neighbor(an, u)
        w2 = _s_basic_neighbor(an, v)
        path, lq, lr = _corollary(an, w1, w2)
        return _finish(an, [u] + path + [v], "P1-P3/lt", lq + lr + 2, u, v)

    if (cu, cv) == ("P3", "P1"):
        if ax_u <= ax_v:
            path, lq, lr = _nbnb_first(an, v, u)
            return _finish(an, path[::-1], "P3-P1/le", lq + lr, u, v)
        w1 = _s_basic_neighbor(an, u)
        w2 = _s_basic_neighbor(an, v)
        path, lq, lr = _corollary(an, w1, w2)
        return _finish(an, [u] + path + [v], "P3-P1/gt", lq + lr + 2, u, v)

    raise WalkConstructionError(f"unhandled category pair {cu}, {cv}")


def _dedup(path: Sequence[int]) -> list[int]:
    out = [path[0]]
    for idx in path[1:]:
        if idx != out[-1]:
            out.append(idx)
    return out


def _finish(an: ParallelAnalysis, path: Sequence[int], label: str,
            bound: int, u: int, v: int) -> WalkRecord:
    rec = WalkRecord(tuple(_dedup(path)), label, bound)
    if not verify_walk(an.skeleton, rec, u, v):
        raise WalkConstructionError(f"constructed walk failed verification ({label})")
    if rec.length > bound:
        raise WalkConstructionError(
            f"constructed walk of length {rec.length} exceeds its bound {bound}")
    return rec


# ---------------------------------------------------------------------------
# non-revisiting search


def _zero_masks(vertices: Sequence, n: int) -> list[int]:
    masks = []
    for rec in vertices:
        mask = 0
        for k in range(n):
            if rec.coords[k] == 0:
                mask |= 1 << k
        masks.append(mask)
    return masks


def _state_search(skel: Skeleton, masks: Sequence[int], start: int, goal: int,
                  allowed: set[int] | None, state_cap: int) -> list[int] | None:
    """BFS over (vertex, visited facet set) states; shortest non-revisiting walk."""
    start_state = (start, masks[start])
    seen = {start_state}
    prev: dict[tuple[int, int], tuple[int, int] | None] = {start_state: None}
    queue = deque([start_state])
    explored = 0
    while queue:
        state = queue.popleft()
        cur, visited = state
        explored += 1
        if explored > state_cap:
            raise StateCapError("non-revisiting state budget exceeded")
        if cur == goal:
            path = []
            node: tuple[int, int] | None = state
            while node is not None:
                path.append(node[0])
                node = prev[node]
            return path[::-1]
        for nxt in skel.neighbors(cur):
            if allowed is not None and nxt not in allowed:
                continue
            entered = masks[nxt] & ~masks[cur]
            if entered & visited:
                continue
            nxt_state = (nxt, visited | masks[nxt])
            if nxt_state in seen:
                continue
            seen.add(nxt_state)
            prev[nxt_state] = state
            queue.append(nxt_state)
    return None


def non_revisiting_walk(P: StdPolyhedron, u: int, v: int, *,
                        skeleton: Skeleton | None = None,
                        state_cap: int = NONREVISIT_STATE_CAP) -> WalkRecord | None:
    """Shortest walk entering only fresh facets at every step, or None.

    Every walk found is asserted to respect length <= m, the facets-minus-
    dimension bound. Raises StateCapError beyond the size guardrails.
    """
    skel = skeleton if skeleton is not None else build_skeleton(P)
    if P.n > NONREVISIT_MAX_COLS:
        raise StateCapError(f"n={P.n} exceeds the non-revisiting column cap")
    if (1 << P.n) * len(skel.vertices) > state_cap:
        raise StateCapError("state space exceeds the guardrail")
    masks = _zero_masks(skel.vertices, P.n)
    path = _state_search(skel, masks, u, v, None, state_cap)
    if path is None:
        return None
    rec = WalkRecord(tuple(path), "nonrevisiting", P.m)
    assert rec.length <= P.m, "non-revisiting walk longer than the facet bound"
    return rec


# ---------------------------------------------------------------------------
# s-monotone walks and s-bounded distances


def s_monotone_walk(P: StdPolyhedron, start: int, direction: str, s_index: int, *,
                    skeleton: Skeleton | None = None) -> WalkRecord:
    """Pivot walk toward an s-extreme vertex via the exact simplex method.

    On integral polyhedra each nondegenerate pivot moves s by at least one,
    so the walk length is bounded by |s_start - s_opt|; that bound is
    asserted and reported.
    """
    if direction not in ("max", "min"):
        raise InputError("direction must be 'max' or 'min'")
    skel = skeleton if skeleton is not None else build_skeleton(P)
    rec0 = skel.vertices[start]
    c = tuple(Fraction(1 if j == s_index else 0) for j in range(P.n))
    result = solve_lp(P.A, P.b, c, sense=direction,
                      start_basis=rec0.bases[0], trace=True)
    if result.status == "unbounded":
        raise UnboundedObjectiveError(result.ray or ())
    assert result.status == "optimal"
    indices = _dedup([skel.index_of(p) for p in result.path])
    s_values = [skel.vertices[i].coords[s_index] for i in indices]
    for a, b in zip(s_values, s_values[1:]):
        assert (b > a) if direction == "max" else (b < a), \
            "simplex walk must move s monotonically"
    claimed: int | None = None
    if all(x.denominator == 1 for rec in skel.vertices for x in rec.coords):
        claimed = abs(int(s_values[-1] - s_values[0]))
        assert len(indices) - 1 <= claimed, "integral step law violated"
    return WalkRecord(tuple(indices), f"smonotone-{direction}", claimed)


@dataclass(frozen=True)
class SBoundedResult:
    """Restricted distances to the two s-extreme vertex sets.

    to_max / to_min use the non-strict reading (s never crosses the start
    level); the strict variants are recorded only where they differ.
    """

    to_max: int | None
    to_min: int | None
    strict_to_max: int | None = None
    strict_to_min: int | None = None

    @property
    def db(self) -> int | None:
        defined = [d for d in (self.to_max, self.to_min) if d is not None]
        return max(defined) if defined else None


def _restricted_distance(skel: Skeleton, s_vals: Sequence[Fraction], start: int,
                         keep, targets: set[int]) -> int | None:
    if start in targets:
        return 0
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt in skel.neighbors(cur):
            if nxt in dist or not keep(nxt):
                continue
            dist[nxt] = dist[cur] + 1
            if nxt in targets:
                return dist[nxt]
            queue.append(nxt)
    return None


def s_bounded_distance_on(skel: Skeleton, start: int, s_index: int) -> SBoundedResult:
    s_vals = [v.coords[s_index] for v in skel.vertices]
    s0 = s_vals[start]
    s_max, s_min = max(s_vals), min(s_vals)
    max_set = {i for i, s in enumerate(s_vals) if s == s_max}
    min_set = {i for i, s in enumerate(s_vals) if s == s_min}
    to_max = _restricted_distance(skel, s_vals, start, lambda i: s_vals[i] >= s0, max_set)
    to_min = _restricted_distance(skel, s_vals, start, lambda i: s_vals[i] <= s0, min_set)
    strict_max = _restricted_distance(skel, s_vals, start, lambda i: s_vals[i] > s0, max_set)
    strict_min = _restricted_distance(skel, s_vals, start, lambda i: s_vals[i] < s0, min_set)
    return SBoundedResult(to_max, to_min,
                          strict_max if strict_max != to_max else None,
                          strict_min if strict_min != to_min else None)


def s_bounded_distance(P: StdPolyhedron, start: int, s_index: int, *,
                       skeleton: Skeleton | None = None) -> SBoundedResult:
    skel = skeleton if skeleton is not None else build_skeleton(P)
    return s_bounded_distance_on(skel, start, s_index)


def s_bounded_diameter_on(skel: Skeleton, s_index: int) -> int | None:
    worst = 0
    for i in range(len(skel.vertices)):
        db = s_bounded_distance_on(skel, i, s_index).db
        if db is None:
            return None
        worst = max(worst, db)
    return worst


def s_bounded_diameter(P: StdPolyhedron, s_index: int, *,
                       skeleton: Skeleton | None = None) -> int | None:
    skel = skeleton if skeleton is not None else build_skeleton(P)
    return s_bounded_diameter_on(skel, s_index)


# ---------------------------------------------------------------------------
# series connection walks


@dataclass
class SeriesAnalysis:
    inst: ConnectionInstance
    skeleton: Skeleton
    splits: tuple[BasisSplit, ...]
    srange: SRange
    q_poly: StdPolyhedron
    r_poly: StdPolyhedron
    q_skel: Skeleton
    r_skel: Skeleton

    @classmethod
    def build(cls, inst: ConnectionInstance) -> "SeriesAnalysis":
        if inst.kind != "series":
            raise InputError("series analysis needs a series instance")
        assert inst.poly is not None
        verts = enumerate_vertices(inst.poly)
        skel = build_skeleton(inst.poly, verts)
        try:
            splits = tuple(classify_vertex(inst, v) for v in verts)
        except DegenerateVertexError as exc:
            raise NonSimpleError(f"instance is degenerate; perturb first ({exc})") from exc
        rng = s_range(inst)
        q_poly = inst.q_polyhedron()
        r_poly = inst.r_polyhedron()
        return cls(inst, skel, splits, rng, q_poly, r_poly,
                   build_skeleton(q_poly), build_skeleton(r_poly))

    def coords(self, i: int) -> Vec:
        return self.skeleton.vertices[i].coords

    def xs_of(self, i: int) -> Vec:
        c = self.coords(i)
        return tuple(c[k] for k in self.inst.split.x_indices) + (c[self.inst.split.s_index],)

    def s_of(self, i: int) -> Fraction:
        return self.coords(i)[self.inst.split.s_index]


def _on_segment(point: Vec, e0: Vec, e1: Vec) -> bool:
    if point == e0 or point == e1:
        return True
    lam: Fraction | None = None
    for p, a, b in zip(point, e0, e1):
        if a != b:
            lam = (p - a) / (b - a)
            break
    if lam is None or lam < 0 or lam > 1:
        return False
    return all(p == a + lam * (b - a) for p, a, b in zip(point, e0, e1))


def _lift_sequence(an: SeriesAnalysis, start: int, q_coords: Sequence[Vec]
                   ) -> tuple[list[int], int]:
    """Lift successive Q-vertices from `start`, correcting failed steps.

    Corrections stay inside the preimage of the Q-edge being traversed.
    Returns the walk and the largest single corrected-step length.
    """
    cur = start
    out = [cur]
    worst = 0
    for k in range(1, len(q_coords)):
        target = q_coords[k]
        direct = [w for w in an.skeleton.neighbors(cur) if an.xs_of(w) == target]
        if direct:
            cur = min(direct, key=an.coords)
            out.append(cur)
            worst = max(worst, 1)
            continue
        prev = q_coords[k - 1]
        allowed = [w for w in range(len(an.skeleton.vertices))
                   if _on_segment(an.xs_of(w), prev, target)]
        goals = {w for w in allowed if an.xs_of(w) == target}
        path = _multi_goal_path(an.skeleton, cur, goals, set(allowed))
        if path is None:
            raise WalkConstructionError(
                f"correction failed between {prev} and {target}")
        out.extend(path[1:])
        cur = path[-1]
        worst = max(worst, len(path) - 1)
    return out, worst


def _multi_goal_path(skel: Skeleton, start: int, goals: set[int],
                     allowed: set[int] | None) -> list[int] | None:
    if start in goals:
        return [start]
    prev = {start: start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt in skel.neighbors(cur):
            if nxt in prev or (allowed is not None and nxt not in allowed):
                continue
            prev[nxt] = cur
            if nxt in goals:
                path = [nxt]
                while path[-1] != start:
                    path.append(prev[path[-1]])
                return path[::-1]
            queue.append(nxt)
    return None


def _crossover(an: SeriesAnalysis, i: int) -> tuple[list[int], bool, bool]:
    """Move an (m1, 1, m2-1) endpoint to a vertex of another category."""
    if an.splits[i].category != "S2":
        return [i], False, False
    targets = {w for w in range(len(an.skeleton.vertices))
               if an.splits[w].category in ("S1", "S3")}
    if not targets:
        raise WalkConstructionError("no vertex outside the crossover category")
    rng = an.srange
    hyp = False
    if rng.s_max_q is not None and (rng.s_max_r is None or rng.s_max_q < rng.s_max_r):
        hyp = True
    if rng.s_min_q > rng.s_min_r:
        hyp = True
    path = _multi_goal_path(an.skeleton, i, targets, None)
    if path is None:
        raise WalkConstructionError("crossover target unreachable")
    return path, True, not hyp


def _face_indices(an: SeriesAnalysis, s_value: Fraction) -> list[int]:
    return [w for w in range(len(an.skeleton.vertices)) if an.s_of(w) == s_value]


def _face_walk(an: SeriesAnalysis, f1: int, f2: int, s_value: Fraction) -> list[int]:
    """Walk inside the face s = s_value: non-revisiting when small, else BFS."""
    allowed = set(_face_indices(an, s_value))
    n = an.inst.poly.n if an.inst.poly is not None else 0
    if n <= NONREVISIT_MAX_COLS:
        masks = _zero_masks(an.skeleton.vertices, n)
        try:
            path = _state_search(an.skeleton, masks, f1, f2, allowed,
                                 NONREVISIT_STATE_CAP)
            if path is not None:
                return path
        except StateCapError:
            pass
    path = shortest_path(an.skeleton, f1, f2,
                         allowed=allowed)
    if path is None:
        raise WalkConstructionError("face walk not found")
    return path


def _blocked_step(an: SeriesAnalysis, cur: int, edge0: Vec, edge1: Vec,
                  s_cap: Fraction) -> int:
    """The single step that lands on the face s = s_cap along a blocked lift."""
    for w in sorted(an.skeleton.neighbors(cur), key=an.coords):
        if an.s_of(w) == s_cap and _on_segment(an.xs_of(w), edge0, edge1):
            return w
    raise WalkConstructionError("blocked lift step did not land on the cap face")


def _series_quadratic_bound(d_a: int, d_b_bar: int, db_b: int, d_b_face: int) -> int:
    term1 = d_a * (db_b + 1) + d_b_face + 2 * d_b_bar
    term2 = (d_a - 1) * (db_b + 1) + d_a + 3 * d_b_bar + 2
    return max(term1, term2)


def series_claimed_bound(an: SeriesAnalysis, *, hirsch: bool = False) -> int | None:
    """The two-term quadratic bound instantiated with measured quantities."""
    d_a = diameter(an.q_skel)
    d_b_bar = diameter(an.r_skel)
    db_b = s_bounded_diameter_on(an.r_skel, 0)
    if db_b is None:
        return None
    if hirsch:
        d_b_face = d_b_bar
    else:
        d_b_face = 0
        seen: set[Vec] = set()
        for i in range(len(an.skeleton.vertices)):
            if an.splits[i].category in ("S1", "S3"):
                xs = an.xs_of(i)
                if xs in seen:
                    continue
                seen.add(xs)
                face = _face_indices_xs(an, xs)
                d_b_face = max(d_b_face, _induced_diameter(an.skeleton, face))
    return _series_quadratic_bound(d_a, d_b_bar, db_b, d_b_face)


def _face_indices_xs(an: SeriesAnalysis, xs: Vec) -> list[int]:
    return [w for w in range(len(an.skeleton.vertices)) if an.xs_of(w) == xs]


def _induced_diameter(skel: Skeleton, allowed: Sequence[int]) -> int:
    allowed_set = set(allowed)
    worst = 0
    for src in allowed:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            for nxt in skel.neighbors(cur):
                if nxt in dist or nxt not in allowed_set:
                    continue
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
        if len(dist) != len(allowed_set):
            raise WalkConstructionError("face subgraph is not connected")
        worst = max(worst, max(dist.values(), default=0))
    return worst


def series_walk(inst: ConnectionInstance, u: int, v: int, *,
                analysis: SeriesAnalysis | None = None,
                hirsch: bool = False) -> WalkRecord:
    """Constructed walk on a series connection.

    Case labels: all-lift (every step lifted directly), corrected (at least
    one failed lift repaired inside its edge preimage), spliced (the lifted
    walk overshot the cap on s and was routed through that face); an
    endpoint moved out of the crossover category appends "+crossover"
    ("+crossover-bfs" when neither extremum hypothesis held).

    Cartesian degenerations delegate to a product walk whose bound is the
    sum of the factor diameters.
    """
    if inst.kind == "cartesian":
        return _cartesian_walk(inst, u, v)
    if inst.kind != "series":
        raise InputError("series_walk needs a series instance")

    probe = analysis.srange if analysis is not None else s_range(inst)
    if probe.s_min_r > probe.s_min_q:
        # wrong orientation for the lifting engine: swap the factor roles
        return _mirrored_series_walk(inst, u, v, hirsch=hirsch)
    an = analysis if analysis is not None else SeriesAnalysis.build(inst)

    skel = an.skeleton
    bound = series_claimed_bound(an, hirsch=hirsch)
    if u == v:
        return WalkRecord((u,), "all-lift", bound)

    pre, crossed_u, bfs_u = _crossover(an, u)
    post, crossed_v, bfs_v = _crossover(an, v)
    u2, v2 = pre[-1], post[-1]

    qu = an.q_skel.index_of(an.xs_of(u2))
    qv = an.q_skel.index_of(an.xs_of(v2))
    q_path_idx = shortest_path(an.q_skel, qu, qv)
    if q_path_idx is None:
        raise WalkConstructionError("left factor skeleton is disconnected")
    q_path = [an.q_skel.vertices[i].coords for i in q_path_idx]

    s_cap = an.srange.s_max_r
    over = [k for k, qc in enumerate(q_path)
            if s_cap is not None and qc[-1] > s_cap]
    corrected = False
    if not over:
        body, worst = _lift_sequence(an, u2, q_path)
        corrected = worst > 1
        if body[-1] != v2:
            tail = _multi_goal_path(skel, body[-1], {v2},
                                    set(_face_indices_xs(an, an.xs_of(v2))))
            if tail is None:
                raise WalkConstructionError("final face walk not found")
            body.extend(tail[1:])
        label = "corrected" if corrected else "all-lift"
    else:
        assert s_cap is not None
        i_first, j_last = min(over), max(over)
        head, worst_h = _lift_sequence(an, u2, q_path[:i_first])
        f1 = _blocked_step(an, head[-1], q_path[i_first - 1], q_path[i_first], s_cap)
        tail_rev, worst_t = _lift_sequence(an, v2, list(reversed(q_path[j_last + 1 :])))
        f2 = _blocked_step(an, tail_rev[-1], q_path[j_last + 1], q_path[j_last], s_cap)
        face = _face_walk(an, f1, f2, s_cap)
        body = head + face + tail_rev[::-1]
        corrected = max(worst_h, worst_t) > 1
        label = "spliced"

    full = _dedup(pre + body[1:] + post[::-1][1:])
    if crossed_u or crossed_v:
        label += "+crossover-bfs" if (bfs_u or bfs_v) else "+crossover"
    rec = WalkRecord(tuple(full), label, bound)
    if not verify_walk(skel, rec, u, v):
        raise WalkConstructionError("constructed series walk failed verification")
    return rec


def _mirrored_series_walk(inst: ConnectionInstance, u: int, v: int, *,
                          hirsch: bool) -> WalkRecord:
    mirrored = mirror_series_instance(inst)
    assert mirrored.poly is not None and inst.poly is not None
    m_an = SeriesAnalysis.build(mirrored)
    orig = build_skeleton(inst.poly)

    def to_mirror(i: int) -> int:
        return m_an.skeleton.index_of(tuple(reversed(orig.vertices[i].coords)))

    def from_mirror(i: int) -> int:
        return orig.index_of(tuple(reversed(m_an.skeleton.vertices[i].coords)))

    rec = series_walk(mirrored, to_mirror(u), to_mirror(v), analysis=m_an,
                      hirsch=hirsch)
    return WalkRecord(tuple(from_mirror(i) for i in rec.vertex_indices),
                      rec.case_label, rec.claimed_bound)


def _cartesian_walk(inst: ConnectionInstance, u: int, v: int) -> WalkRecord:
    if inst.poly is None:
        raise InputError("empty cartesian instance has no walks")
    assert inst.factors is not None
    skel = build_skeleton(inst.poly)
    path = shortest_path(skel, u, v)
    if path is None:
        raise WalkConstructionError("product skeleton is disconnected")
    bound = sum(diameter(build_skeleton(f)) for f in inst.factors)
    rec = WalkRecord(tuple(path), "cartesian", bound)
    if rec.length > bound:
        raise WalkConstructionError("product walk exceeds the additivity bound")
    return rec
