"""Standard-form polyhedra: exact vertex enumeration, skeleton, diameter.

A polyhedron is {x : Ax = b, x >= 0} with A of full row rank, so the n
coordinate hyperplanes x_i = 0 are exactly the facets, the dimension is
n - m, and the Hirsch bound is m.
"""
from __future__ import annotations

import json
import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

from .exactlin import (ExactLinError, Matrix, Vec, format_matrix, format_rat,
                       parse_matrix, rank, rat, solve_basis, vector)

MAX_COLS = 24
MAX_BASES = 5_000_000


class PolytopeError(ValueError):
    pass


class InputError(PolytopeError):
    pass


class EmptyPolyhedronError(PolytopeError):
    pass


class EnumerationLimitError(PolytopeError):
    """Size guardrail tripped; pass unlock=True to force the enumeration."""


class DisconnectedSkeletonError(PolytopeError):
    """Signals a bug: graphs of pointed nonempty polyhedra are connected."""


class PerturbationError(PolytopeError):
    """No verified right-hand-side perturbation was found."""


@dataclass(frozen=True)
class StdPolyhedron:
    """Standard-form system {x : Ax = b, x >= 0} with irredundant rows."""

    A: Matrix
    b: Vec

    def __post_init__(self) -> None:
        if len(self.b) != self.A.rows:
            raise InputError("rhs length does not match row count")
        if self.A.rows > self.A.cols:
            raise InputError("more rows than columns")
        if rank(self.A) != self.A.rows:
            raise InputError("rows are linearly dependent")

    @property
    def m(self) -> int:
        return self.A.rows

    @property
    def n(self) -> int:
        return self.A.cols


@dataclass(frozen=True)
class VertexRecord:
    """A geometric vertex with every feasible basis that selects it."""

    coords: Vec
    bases: tuple[tuple[int, ...], ...]
    support: tuple[int, ...]

    def is_nondegenerate(self, m: int) -> bool:
        return len(self.bases) == 1 and len(self.support) == m


@dataclass(frozen=True)
class Skeleton:
    vertices: tuple[VertexRecord, ...]
    edges: frozenset[tuple[int, int]]

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        neigh: list[list[int]] = [[] for _ in self.vertices]
        for i, j in self.edges:
            neigh[i].append(j)
            neigh[j].append(i)
        return tuple(tuple(sorted(ns)) for ns in neigh)

    @cached_property
    def coord_index(self) -> dict[Vec, int]:
        return {v.coords: i for i, v in enumerate(self.vertices)}

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def index_of(self, coords: Sequence[Fraction]) -> int:
        key = tuple(coords)
        if key not in self.coord_index:
            raise InputError(f"no vertex with coordinates {key}")
        return self.coord_index[key]


def enumerate_vertices(P: StdPolyhedron, *, max_bases: int = MAX_BASES,
                       unlock: bool = False) -> tuple[VertexRecord, ...]:
    """All vertices as basic feasible solutions, grouped per coordinate vector.

    Iterates every C(n, m) column subset; degenerate vertices collect all of
    their feasible bases in one record. Output is sorted lexicographically
    by coordinates.
    """
    m, n = P.m, P.n
    if not unlock and (n > MAX_COLS or math.comb(n, m) > max_bases):
        raise EnumerationLimitError(
            f"refusing {math.comb(n, m)} bases for n={n}, m={m} without unlock")
    groups: dict[Vec, list[tuple[int, ...]]] = {}
    for basis in combinations(range(n), m):
        x = solve_basis(P.A, basis, P.b)
        if x is None:
            continue
        if any(v < 0 for v in x):
            continue
        groups.setdefault(x, []).append(basis)
    records = []
    for coords in sorted(groups):
        bases = tuple(sorted(groups[coords]))
        support = tuple(j for j, v in enumerate(coords) if v != 0)
        records.append(VertexRecord(coords, bases, support))
    return tuple(records)


def is_simple(P: StdPolyhedron, vertices: Sequence[VertexRecord] | None = None) -> bool:
    """True iff every vertex has a unique basis and full support m."""
    verts = enumerate_vertices(P) if vertices is None else vertices
    if not verts:
        raise EmptyPolyhedronError("polyhedron has no vertices")
    return all(v.is_nondegenerate(P.m) for v in verts)


def feasible_basis_set(vertices: Sequence[VertexRecord]) -> frozenset[tuple[int, ...]]:
    return frozenset(b for v in vertices for b in v.bases)


def perturb_to_simple(P: StdPolyhedron, *, max_halvings: int = 64
                      ) -> tuple[StdPolyhedron, Fraction]:
    """Perturb b to b + (eps, eps^2, ..., eps^m) until the result is simple.

    The returned polyhedron is verified by re-enumeration to be simple and
    to have exactly the same set of feasible bases as P. Halving starts at
    eps = 1/2. Raises PerturbationError when no eps in the family verifies.
    """
    verts = enumerate_vertices(P)
    if not verts:
        raise PerturbationError("no feasible basis to preserve")
    if is_simple(P, verts):
        return P, Fraction(0)
    target = feasible_basis_set(verts)
    eps = Fraction(1, 2)
    for _ in range(max_halvings):
        b_new = tuple(bi + eps ** (i + 1) for i, bi in enumerate(P.b))
        Pp = StdPolyhedron(P.A, b_new)
        verts_p = enumerate_vertices(Pp)
        if verts_p and feasible_basis_set(verts_p) == target and is_simple(Pp, verts_p):
            return Pp, eps
        eps = eps / 2
    raise PerturbationError("no verified perturbation in the halving family")


def build_skeleton(P: StdPolyhedron, vertices: Sequence[VertexRecord] | None = None) -> Skeleton:
    """Vertex adjacency via the one-dimensional-face criterion.

    u, v are adjacent iff |S| - rank(A_S) == 1 for S the union of supports;
    the midpoint of u, v is strictly positive on S, so that quantity is the
    dimension of the smallest face containing both. For simple P this must
    agree with single-column basis exchange, which is asserted.
    """
    verts = tuple(enumerate_vertices(P) if vertices is None else vertices)
    edges: set[tuple[int, int]] = set()
    simple = bool(verts) and all(v.is_nondegenerate(P.m) for v in verts)
    all_rows = range(P.m)
    for i, j in combinations(range(len(verts)), 2):
        S = sorted(set(verts[i].support) | set(verts[j].support))
        dim = len(S) - rank(P.A.submatrix(all_rows, S))
        if dim == 1:
            edges.add((i, j))
        if simple:
            exchange = len(set(verts[i].bases[0]) ^ set(verts[j].bases[0])) == 2
            assert exchange == (dim == 1), "edge criteria disagree on simple input"
    return Skeleton(verts, frozenset(edges))


def bfs_distances(skel: Skeleton, source: int) -> list[int | None]:
    dist: list[int | None] = [None] * len(skel.vertices)
    dist[source] = 0
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        for nxt in skel.neighbors(cur):
            if dist[nxt] is None:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def shortest_path(skel: Skeleton, source: int, target: int,
                  allowed: Iterable[int] | None = None) -> list[int] | None:
    """BFS path source -> target, optionally restricted to `allowed` vertices."""
    ok = None if allowed is None else set(allowed)
    if ok is not None and (source not in ok or target not in ok):
        return None
    prev: dict[int, int] = {source: source}
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        if cur == target:
            path = [cur]
            while path[-1] != source:
                path.append(prev[path[-1]])
            return path[::-1]
        for nxt in skel.neighbors(cur):
            if nxt in prev or (ok is not None and nxt not in ok):
                continue
            prev[nxt] = cur
            queue.append(nxt)
    return None


def diameter(skel: Skeleton) -> int:
    """Max over vertex pairs of the BFS distance."""
    if not skel.vertices:
        raise EmptyPolyhedronError("empty skeleton")
    best = 0
    for source in range(len(skel.vertices)):
        dist = bfs_distances(skel, source)
        if any(d is None for d in dist):
            raise DisconnectedSkeletonError("skeleton is not connected")
        best = max(best, max(d for d in dist if d is not None))
    return best


def hirsch_bound(P: StdPolyhedron) -> int:
    """Facets minus dimension: n - (n - m) = m."""
    return P.m


def estimate_diam_over_rhs(A: Matrix, samples: int, seed: int,
                           *, z_max: int = 3) -> tuple[int, list[Vec]]:
    """Certified lower bound on the diameter over all right-hand sides.

    Samples b = A z for nonnegative integer z (so z itself is feasible),
    perturbs to simple, and takes the max observed diameter. Returns the
    bound and the perturbed right-hand sides achieving it. Never exact:
    a lower bound only.
    """
    if rank(A) != A.rows:
        raise InputError("matrix must have full row rank")
    rng = random.Random(seed)
    best = 0
    witnesses: list[Vec] = []
    for _ in range(samples):
        z = vector(rng.randint(0, z_max) for _ in range(A.cols))
        b = A.mul_vec(z)
        P = StdPolyhedron(A, b)
        try:
            Pp, _ = perturb_to_simple(P)
        except PerturbationError:
            continue  # skipped samples keep the bound a valid lower bound
        verts = enumerate_vertices(Pp)
        d = diameter(build_skeleton(Pp, verts))
        if d > best:
            best = d
            witnesses = [Pp.b]
        elif d == best:
            witnesses.append(Pp.b)
    return best, witnesses


def parse_instance(text: str) -> StdPolyhedron:
    """Instance file: matrix text format followed by one line of m RHS entries."""
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if len(lines) < 2:
        raise InputError("instance text truncated")
    head = lines[0].split()
    if len(head) != 2:
        raise InputError(f"bad header line: {lines[0]!r}")
    m = int(head[0])
    A = parse_matrix("\n".join(lines[: 1 + m]))
    if len(lines) < m + 2:
        raise InputError("missing RHS line")
    rhs_parts = lines[1 + m].split()
    if len(rhs_parts) != m:
        raise InputError(f"expected {m} RHS entries, got {len(rhs_parts)}")
    return StdPolyhedron(A, vector(rhs_parts))


def format_instance(P: StdPolyhedron) -> str:
    return format_matrix(P.A) + " ".join(format_rat(x) for x in P.b) + "\n"


def skeleton_to_json(skel: Skeleton, *, simple: bool) -> str:
    payload = {
        "vertices": [[format_rat(x) for x in v.coords] for v in skel.vertices],
        "edges": sorted([i, j] for i, j in skel.edges),
        "simple": simple,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
