"""Parallel / series connections, 1-sum, 2-sum, and graphic gluing.

The two building blocks are matrices in linked form: the left operand
carries its link column as the last column (unit entry in the last row),
the right operand as the first column (unit entry in the first row). The
connection polyhedron splits its coordinates into an x-block, the shared
variable s, and a y-block.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Literal, Sequence

from .exactlin import (ExactLinError, Matrix, Vec, _bareiss_echelon,
                       _scaled_int_rows, dot, format_rat, rank, rat,
                       solve_square, vector, vstack)
from .polytope import InputError, StdPolyhedron


@dataclass(frozen=True)
class LinkedForm:
    """Matrix whose link column is already a unit column at the edge."""

    matrix: Matrix
    position: Literal["last", "first"]

    def __post_init__(self) -> None:
        M = self.matrix
        if M.rows < 1 or M.cols < 2:
            raise InputError("linked form needs at least 1 row and 2 columns")
        col = M.cols - 1 if self.position == "last" else 0
        unit_row = M.rows - 1 if self.position == "last" else 0
        for i in range(M.rows):
            want = Fraction(1 if i == unit_row else 0)
            if M.entry(i, col) != want:
                raise InputError(f"column {col} is not the required unit column")
        if rank(M) != M.rows:
            raise InputError("linked form must have full row rank")

    @property
    def m(self) -> int:
        return self.matrix.rows

    @property
    def n(self) -> int:
        return self.matrix.cols

    @property
    def inner(self) -> Matrix:
        """The block without the link row and link column."""
        M = self.matrix
        if self.position == "last":
            return M.submatrix(range(M.rows - 1), range(M.cols - 1))
        return M.submatrix(range(1, M.rows), range(1, M.cols))

    @property
    def link_row(self) -> Vec:
        M = self.matrix
        if self.position == "last":
            return M.row(M.rows - 1)[: M.cols - 1]
        return M.row(0)[1:]


@dataclass(frozen=True)
class BlockSplit:
    x_indices: tuple[int, ...]
    s_index: int
    y_indices: tuple[int, ...]


@dataclass(frozen=True)
class ConnectionInstance:
    """A parallel or series connection with its block decomposition.

    kind "cartesian" marks a series connection whose assembled rows were
    linearly dependent; the polyhedron is then the product of the two
    recorded factors (the shared variable is pinned to s_star) and `poly`
    holds the block-diagonal product system, without an s column.
    """

    kind: Literal["parallel", "series", "cartesian"]
    abar: LinkedForm
    bbar: LinkedForm
    c_A: Vec
    c_a: Fraction
    c_b: Fraction
    c_B: Vec
    poly: StdPolyhedron | None
    split: BlockSplit
    factors: tuple[StdPolyhedron, StdPolyhedron] | None = None
    s_star: Fraction | None = None

    @property
    def m1(self) -> int:
        return self.abar.m

    @property
    def n1(self) -> int:
        return self.abar.n

    @property
    def m2(self) -> int:
        return self.bbar.m

    @property
    def n2(self) -> int:
        return self.bbar.n

    @property
    def empty(self) -> bool:
        return self.kind == "cartesian" and self.s_star is None

    def q_polyhedron(self) -> StdPolyhedron:
        """The left factor {x : Abar x = (c_A, c_a), x >= 0}."""
        return StdPolyhedron(self.abar.matrix, self.c_A + (self.c_a,))

    def r_polyhedron(self) -> StdPolyhedron:
        """The right factor {x : Bbar x = (c_b, c_B), x >= 0}."""
        return StdPolyhedron(self.bbar.matrix, (self.c_b,) + self.c_B)

    def with_rhs(self, rhs: Sequence[Fraction]) -> "ConnectionInstance":
        """Same matrices, new right-hand side in this instance's row layout."""
        rhs = tuple(rhs)
        m1, m2 = self.m1, self.m2
        if self.kind == "parallel":
            if len(rhs) != m1 + m2 - 1:
                raise InputError("rhs length mismatch")
            c_A, mid, c_B = rhs[: m1 - 1], rhs[m1 - 1], rhs[m1:]
            # the merged middle entry is split as (c_a + delta, c_b), keeping c_b
            return parallel_connect(self.abar, c_A, mid - self.c_b, self.bbar,
                                    self.c_b, c_B)
        if len(rhs) != m1 + m2:
            raise InputError("rhs length mismatch")
        return series_connect(self.abar, rhs[: m1 - 1], rhs[m1 - 1], self.bbar,
                              rhs[m1], rhs[m1 + 1 :])


def _split_for(n1: int, n2: int) -> BlockSplit:
    return BlockSplit(tuple(range(n1 - 1)), n1 - 1, tuple(range(n1, n1 + n2 - 1)))


def parallel_matrix(abar: LinkedForm, bbar: LinkedForm) -> Matrix:
    """Three block rows: (A 0 0), (a 1 b), (0 0 B)."""
    A, a = abar.inner, abar.link_row
    B, b = bbar.inner, bbar.link_row
    n1, n2 = abar.n, bbar.n
    rows: list[list[Fraction]] = []
    zero_tail = [Fraction(0)] * n2
    for i in range(A.rows):
        rows.append(list(A.row(i)) + zero_tail[: n2])
    rows.append(list(a) + [Fraction(1)] + list(b))
    for i in range(B.rows):
        rows.append([Fraction(0)] * n1 + list(B.row(i)))
    return Matrix.from_rows(rows) if rows else Matrix(0, n1 + n2 - 1, ())


def series_matrix(abar: LinkedForm, bbar: LinkedForm) -> Matrix:
    """Four block rows: (A 0 0), (a 1 0), (0 1 b), (0 0 B)."""
    A, a = abar.inner, abar.link_row
    B, b = bbar.inner, bbar.link_row
    n1, n2 = abar.n, bbar.n
    rows: list[list[Fraction]] = []
    for i in range(A.rows):
        rows.append(list(A.row(i)) + [Fraction(0)] * n2)
    rows.append(list(a) + [Fraction(1)] + [Fraction(0)] * (n2 - 1))
    rows.append([Fraction(0)] * (n1 - 1) + [Fraction(1)] + list(b))
    for i in range(B.rows):
        rows.append([Fraction(0)] * n1 + list(B.row(i)))
    return Matrix.from_rows(rows)


def _check_forms(abar: LinkedForm, bbar: LinkedForm) -> None:
    if abar.position != "last":
        raise InputError("left operand must carry its link column last")
    if bbar.position != "first":
        raise InputError("right operand must carry its link column first")


def parallel_connect(abar: LinkedForm, c_A: Sequence, c_a, bbar: LinkedForm,
                     c_b, c_B: Sequence) -> ConnectionInstance:
    """Parallel connection polyhedron; the middle RHS entries merge to c_a + c_b."""
    _check_forms(abar, bbar)
    c_A, c_B = vector(c_A), vector(c_B)
    c_a, c_b = rat(c_a), rat(c_b)
    if len(c_A) != abar.m - 1 or len(c_B) != bbar.m - 1:
        raise InputError("right-hand side blocks have wrong lengths")
    M = parallel_matrix(abar, bbar)
    rhs = c_A + (c_a + c_b,) + c_B
    poly = StdPolyhedron(M, rhs)
    return ConnectionInstance("parallel", abar, bbar, c_A, c_a, c_b, c_B,
                              poly, _split_for(abar.n, bbar.n))


def _dependency_multipliers(block: Matrix, target: Vec) -> Vec | None:
    """Solve lambda^T block = target exactly, or None."""
    # least-structure approach: solve block^T as an overdetermined system
    bt = block.transpose()
    rows = _scaled_int_rows(bt, extra=target)
    rank_aug, piv = _bareiss_echelon(rows)
    if any(c >= block.rows for c in piv):
        return None  # inconsistent
    # re-solve on a square subsystem of independent rows of block^T
    bt_rows = [tuple(bt.row(i)) for i in range(bt.rows)]
    chosen: list[int] = []
    for i in range(bt.rows):
        trial = chosen + [i]
        sub = Matrix.from_rows([bt_rows[k] for k in trial])
        if rank(sub) == len(trial):
            chosen.append(i)
        if len(chosen) == block.rows:
            break
    sub = Matrix.from_rows([bt_rows[k] for k in chosen])
    lam = solve_square(sub, tuple(target[k] for k in chosen))
    if lam is None:
        return None
    # verify against the full system
    if bt.mul_vec(lam) != tuple(target):
        return None
    return lam


def series_connect(abar: LinkedForm, c_A: Sequence, c_a, bbar: LinkedForm,
                   c_b, c_B: Sequence) -> ConnectionInstance:
    """Series connection polyhedron, keeping c_a and c_b separate.

    When the assembled rows are dependent (both link rows reduce to the
    shared-variable row) the connection degenerates to a Cartesian product:
    s is pinned, and the instance records the two factors instead.
    """
    _check_forms(abar, bbar)
    c_A, c_B = vector(c_A), vector(c_B)
    c_a, c_b = rat(c_a), rat(c_b)
    if len(c_A) != abar.m - 1 or len(c_B) != bbar.m - 1:
        raise InputError("right-hand side blocks have wrong lengths")
    M = series_matrix(abar, bbar)
    split = _split_for(abar.n, bbar.n)
    if rank(M) == abar.m + bbar.m:
        poly = StdPolyhedron(M, c_A + (c_a, c_b) + c_B)
        return ConnectionInstance("series", abar, bbar, c_A, c_a, c_b, c_B, poly, split)

    # dependent rows: a is in the row space of A and b in that of B
    A, a = abar.inner, abar.link_row
    B, b = bbar.inner, bbar.link_row
    lam = _dependency_multipliers(A, a) if A.rows else (None if any(a) else ())
    mu = _dependency_multipliers(B, b) if B.rows else (None if any(b) else ())
    if lam is None or mu is None:
        raise InputError("rank-deficient series connection of unexpected shape")
    s_q = c_a - dot(lam, c_A)
    s_r = c_b - dot(mu, c_B)
    s_star: Fraction | None = s_q if (s_q == s_r and s_q >= 0) else None
    factor_x = StdPolyhedron(A, c_A) if A.rows else StdPolyhedron(
        Matrix(0, abar.n - 1, ()), ())
    factor_y = StdPolyhedron(B, c_B) if B.rows else StdPolyhedron(
        Matrix(0, bbar.n - 1, ()), ())
    poly = one_sum(factor_x, factor_y) if s_star is not None else None
    return ConnectionInstance("cartesian", abar, bbar, c_A, c_a, c_b, c_B,
                              poly, split, factors=(factor_x, factor_y),
                              s_star=s_star)


def mirror_series_instance(inst: ConnectionInstance) -> ConnectionInstance:
    """Swap the roles of the two factors by rotating all coordinates 180 deg.

    Vertex coordinates of the mirrored polyhedron are the reversed tuples of
    the original's; the shared variable stays in place.
    """
    if inst.kind not in ("series", "cartesian"):
        raise InputError("only series instances can be mirrored")
    abar_new = LinkedForm(inst.bbar.matrix.rot180(), "last")
    bbar_new = LinkedForm(inst.abar.matrix.rot180(), "first")
    return series_connect(abar_new, tuple(reversed(inst.c_B)), inst.c_b,
                          bbar_new, inst.c_a, tuple(reversed(inst.c_A)))


def two_sum(M: Matrix, N: Matrix) -> Matrix:
    """[A | a] (+)2 [b ; B] = [[A, ab], [0, B]].

    `a` is the last column of M, `b` the first row of N. When both operands
    are in linked form the result coincides with the parallel connection
    matrix, which is asserted.
    """
    if M.cols < 1 or N.rows < 1:
        raise ExactLinError("two_sum operands too small")
    A = M.submatrix(range(M.rows), range(M.cols - 1))
    a = M.col(M.cols - 1)
    b = N.row(0)
    B = N.submatrix(range(1, N.rows), range(N.cols))
    rows: list[list[Fraction]] = []
    for i in range(M.rows):
        rows.append(list(A.row(i)) + [a[i] * bj for bj in b])
    for i in range(B.rows):
        rows.append([Fraction(0)] * A.cols + list(B.row(i)))
    out = Matrix.from_rows(rows)
    try:
        lf_a = LinkedForm(M, "last")
        lf_b = LinkedForm(N, "first")
    except InputError:
        return out
    assert out == parallel_matrix(lf_a, lf_b), \
        "two_sum of linked forms must equal the parallel connection"
    return out


def one_sum(P: StdPolyhedron, R: StdPolyhedron) -> StdPolyhedron:
    """Block-diagonal join; the polyhedron is the Cartesian product."""
    rows: list[list[Fraction]] = []
    for i in range(P.m):
        rows.append(list(P.A.row(i)) + [Fraction(0)] * R.n)
    for i in range(R.m):
        rows.append([Fraction(0)] * P.n + list(R.A.row(i)))
    if not rows:
        return StdPolyhedron(Matrix(0, P.n + R.n, ()), ())
    return StdPolyhedron(Matrix.from_rows(rows), P.b + R.b)


# ---------------------------------------------------------------------------
# digraphs and graphic connections


@dataclass(frozen=True)
class Digraph:
    """Simple arc-list digraph; arcs are (tail, head, label)."""

    nodes: int
    arcs: tuple[tuple[int, int, str], ...]

    def arc_by_label(self, label: str) -> tuple[int, int, str]:
        for arc in self.arcs:
            if arc[2] == label:
                return arc
        raise InputError(f"no arc labeled {label!r}")

    def is_connected(self) -> bool:
        if self.nodes == 0:
            return True
        seen = {0}
        frontier = [0]
        neigh: dict[int, list[int]] = {v: [] for v in range(self.nodes)}
        for t, h, _ in self.arcs:
            neigh[t].append(h)
            neigh[h].append(t)
        while frontier:
            cur = frontier.pop()
            for nxt in neigh[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return len(seen) == self.nodes


def parse_digraph(text: str) -> Digraph:
    """Digraph file: `V E` then E lines `tail head label`."""
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise InputError("empty digraph text")
    head = lines[0].split()
    if len(head) != 2:
        raise InputError(f"bad header: {lines[0]!r}")
    v, e = int(head[0]), int(head[1])
    if len(lines) < 1 + e:
        raise InputError("digraph text truncated")
    arcs = []
    for k in range(e):
        parts = lines[1 + k].split()
        if len(parts) != 3:
            raise InputError(f"bad arc line: {lines[1 + k]!r}")
        t, h = int(parts[0]), int(parts[1])
        if not (0 <= t < v and 0 <= h < v):
            raise InputError(f"arc endpoint out of range: {lines[1 + k]!r}")
        arcs.append((t, h, parts[2]))
    return Digraph(v, tuple(arcs))


def format_digraph(g: Digraph) -> str:
    lines = [f"{g.nodes} {len(g.arcs)}"]
    lines.extend(f"{t} {h} {label}" for t, h, label in g.arcs)
    return "\n".join(lines) + "\n"


def incidence_matrix(g: Digraph, *, drop_last_row: bool = True) -> Matrix:
    """Node-arc incidence: +1 at the tail, -1 at the head of each arc.

    Dropping the last row makes the matrix full row rank for a connected
    graph (the dropped row is the redundant one).
    """
    rows = g.nodes - 1 if drop_last_row else g.nodes
    entries = [[Fraction(0)] * len(g.arcs) for _ in range(rows)]
    for j, (t, h, _) in enumerate(g.arcs):
        if t < rows:
            entries[t][j] += 1
        if h < rows:
            entries[h][j] -= 1
    return Matrix.from_rows(entries) if rows else Matrix(0, len(g.arcs), ())


def graphic_connection(g1: Digraph, p1: str, g2: Digraph, p2: str,
                       kind: Literal["parallel", "series"]) -> tuple[Digraph, Matrix]:
    """Glue two digraphs along their marked arcs.

    parallel: identify tails and heads of the marked arcs and merge the two
    arcs into one. series: delete both marked arcs, identify the tails, and
    join the two (still separate) heads by a new arc. Returns the glued
    digraph and its incidence matrix with the redundant last row dropped.
    """
    t1, h1, _ = g1.arc_by_label(p1)
    t2, h2, _ = g2.arc_by_label(p2)
    if t1 == h1 or t2 == h2:
        raise InputError("marked arcs must not be loops")

    if kind == "parallel":
        mapping: dict[int, int] = {t2: t1, h2: h1}
        nxt = g1.nodes
        for v in range(g2.nodes):
            if v not in mapping:
                mapping[v] = nxt
                nxt += 1
        arcs = list(g1.arcs)
        arcs.extend((mapping[t], mapping[h], f"g2:{label}")
                    for t, h, label in g2.arcs if label != p2)
        glued = Digraph(nxt, tuple(arcs))
    elif kind == "series":
        mapping = {t2: t1}
        nxt = g1.nodes
        for v in range(g2.nodes):
            if v not in mapping:
                mapping[v] = nxt
                nxt += 1
        arcs = [arc for arc in g1.arcs if arc[2] != p1]
        arcs.extend((mapping[t], mapping[h], f"g2:{label}")
                    for t, h, label in g2.arcs if label != p2)
        arcs.append((h1, mapping[h2], p1))  # the new shared arc joins the split heads
        glued = Digraph(nxt, tuple(arcs))
    else:
        raise InputError("kind must be 'parallel' or 'series'")
    return glued, incidence_matrix(glued)


def fig1_graphs() -> tuple[Digraph, str, Digraph, str]:
    """The worked example pair: 7 nodes / 9 arcs and 4 nodes / 6 arcs."""
    g1 = Digraph(7, (
        (0, 1, "a0"), (1, 3, "a1"), (3, 4, "a2"), (4, 6, "a3"),
        (6, 5, "p1"), (5, 3, "a4"), (3, 2, "a5"), (2, 0, "a6"), (1, 2, "a7"),
    ))
    g2 = Digraph(4, (
        (1, 3, "b0"), (3, 2, "b1"), (2, 0, "b2"), (1, 0, "p2"),
        (0, 3, "b3"), (1, 2, "b4"),
    ))
    return g1, "p1", g2, "p2"


def _int_det(rows: list[list[int]]) -> int:
    """Fraction-free determinant of a small integer matrix."""
    n = len(rows)
    work = [row[:] for row in rows]
    sign = 1
    prev = 1
    for c in range(n):
        p = None
        for i in range(c, n):
            if work[i][c]:
                p = i
                break
        if p is None:
            return 0
        if p != c:
            work[c], work[p] = work[p], work[c]
            sign = -sign
        piv = work[c][c]
        for i in range(c + 1, n):
            f = work[i][c]
            for j in range(c, n):
                work[i][j] = (piv * work[i][j] - f * work[c][j]) // prev
        prev = piv
    return sign * work[n - 1][n - 1]


def tu_check(M: Matrix, *, max_minors: int = 500_000) -> bool | None:
    """Total unimodularity by exhaustive minors; None when over budget.

    Entries outside {-1, 0, 1} are an immediate False. Every square
    submatrix determinant must lie in {-1, 0, 1}.
    """
    for x in M.entries:
        if x.denominator != 1 or abs(x.numerator) > 1:
            return False
    m, n = M.rows, M.cols
    total = sum(math.comb(m, k) * math.comb(n, k) for k in range(2, min(m, n) + 1))
    if total > max_minors:
        return None
    int_rows = [[int(x) for x in M.row(i)] for i in range(m)]
    for k in range(2, min(m, n) + 1):
        for rsel in combinations(range(m), k):
            picked = [int_rows[i] for i in rsel]
            for csel in combinations(range(n), k):
                sub = [[row[j] for j in csel] for row in picked]
                if abs(_int_det(sub)) > 1:
                    return False
    return True


# ---------------------------------------------------------------------------
# connection instance I/O


def connection_sidecar(inst: ConnectionInstance) -> str:
    payload = {
        "kind": inst.kind,
        "m1": inst.m1, "n1": inst.n1, "m2": inst.m2, "n2": inst.n2,
        "x": list(inst.split.x_indices),
        "s": inst.split.s_index,
        "y": list(inst.split.y_indices),
        "c_a": format_rat(inst.c_a),
        "c_b": format_rat(inst.c_b),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def load_connection(instance_text: str, sidecar_text: str) -> ConnectionInstance:
    """Rebuild a ConnectionInstance from an instance file plus its sidecar."""
    from .polytope import parse_instance

    meta = json.loads(sidecar_text)
    kind = meta["kind"]
    m1, n1, m2, n2 = meta["m1"], meta["n1"], meta["m2"], meta["n2"]
    c_a, c_b = rat(meta["c_a"]), rat(meta["c_b"])
    P = parse_instance(instance_text)
    A = P.A
    if kind == "parallel":
        abar = LinkedForm(vstack(
            A.submatrix(range(m1 - 1), range(n1)),
            A.submatrix([m1 - 1], range(n1))), "last")
        brow = A.submatrix([m1 - 1], range(n1 - 1, n1 + n2 - 1))
        bbar = LinkedForm(vstack(
            brow, A.submatrix(range(m1, m1 + m2 - 1), range(n1 - 1, n1 + n2 - 1))), "first")
        c_A = P.b[: m1 - 1]
        c_B = P.b[m1:]
        return parallel_connect(abar, c_A, c_a, bbar, c_b, c_B)
    abar = LinkedForm(A.submatrix(range(m1), range(n1)), "last")
    bbar = LinkedForm(A.submatrix(range(m1, m1 + m2), range(n1 - 1, n1 + n2 - 1)), "first")
    return series_connect(abar, P.b[: m1 - 1], P.b[m1 - 1], bbar, P.b[m1], P.b[m1 + 1 :])
