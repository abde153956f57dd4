"""Exact rational linear algebra on dense matrices.

Everything is arbitrary-precision rational; no routine here ever rounds.
Row reduction is fraction-free (Bareiss) over integer-scaled rows so that
intermediate values stay as small as exactness allows.

Indices are 0-based everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Sequence

Rational = Fraction
Vec = tuple[Fraction, ...]


class ExactLinError(ValueError):
    """Malformed input to a linear-algebra routine."""


class LoopElementError(ExactLinError):
    """The designated link column is identically zero."""


def rat(value: int | str | Fraction) -> Fraction:
    """Coerce an int, Fraction, or `p` / `p/q` string (q > 0) to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        num, sep, den = text.partition("/")
        try:
            if not sep:
                return Fraction(int(num))
            d = int(den)
            if d <= 0:
                raise ExactLinError(f"denominator must be positive: {text!r}")
            return Fraction(int(num), d)
        except ValueError as exc:
            raise ExactLinError(f"bad rational literal: {text!r}") from exc
    raise ExactLinError(f"cannot interpret {value!r} as a rational")


def vector(items: Iterable[int | str | Fraction]) -> Vec:
    return tuple(rat(x) for x in items)


def format_rat(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    if len(u) != len(v):
        raise ExactLinError("dot: length mismatch")
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


@dataclass(frozen=True)
class Matrix:
    """Immutable dense matrix of Fractions, row-major."""

    rows: int
    cols: int
    entries: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ExactLinError("negative dimension")
        if len(self.entries) != self.rows * self.cols:
            raise ExactLinError("entry count does not match dimensions")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int | str | Fraction]]) -> "Matrix":
        m = len(rows)
        n = len(rows[0]) if m else 0
        flat: list[Fraction] = []
        for r in rows:
            if len(r) != n:
                raise ExactLinError("ragged rows")
            flat.extend(rat(x) for x in r)
        return cls(m, n, tuple(flat))

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls(n, n, tuple(Fraction(1 if i == j else 0) for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, m: int, n: int) -> "Matrix":
        return cls(m, n, (Fraction(0),) * (m * n))

    def entry(self, i: int, j: int) -> Fraction:
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> Vec:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def col(self, j: int) -> Vec:
        return tuple(self.entries[i * self.cols + j] for i in range(self.rows))

    def to_rows(self) -> list[list[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "Matrix":
        return Matrix(self.cols, self.rows,
                      tuple(self.entry(i, j) for j in range(self.cols) for i in range(self.rows)))

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "Matrix":
        return Matrix(len(row_idx), len(col_idx),
                      tuple(self.entry(i, j) for i in row_idx for j in col_idx))

    def with_columns(self, order: Sequence[int]) -> "Matrix":
        if sorted(order) != list(range(self.cols)):
            raise ExactLinError("column order must be a permutation")
        return self.submatrix(range(self.rows), order)

    def rot180(self) -> "Matrix":
        return Matrix(self.rows, self.cols, tuple(reversed(self.entries)))

    def mul_vec(self, v: Sequence[Fraction]) -> Vec:
        if len(v) != self.cols:
            raise ExactLinError("mul_vec: length mismatch")
        return tuple(dot(self.row(i), v) for i in range(self.rows))

    def __str__(self) -> str:
        return format_matrix(self)


def hstack(*mats: Matrix) -> Matrix:
    rows = mats[0].rows
    if any(m.rows != rows for m in mats):
        raise ExactLinError("hstack: row mismatch")
    out: list[Fraction] = []
    for i in range(rows):
        for m in mats:
            out.extend(m.row(i))
    return Matrix(rows, sum(m.cols for m in mats), tuple(out))


def vstack(*mats: Matrix) -> Matrix:
    cols = mats[0].cols
    if any(m.cols != cols for m in mats):
        raise ExactLinError("vstack: column mismatch")
    out: list[Fraction] = []
    for m in mats:
        out.extend(m.entries)
    return Matrix(sum(m.rows for m in mats), cols, tuple(out))


def _scaled_int_rows(M: Matrix, extra: Sequence[Fraction] | None = None) -> list[list[int]]:
    """Rows of M (optionally augmented by `extra`), each scaled to integers."""
    out: list[list[int]] = []
    for i in range(M.rows):
        row = list(M.row(i))
        if extra is not None:
            row.append(extra[i])
        scale = 1
        for q in row:
            scale = scale * q.denominator // math.gcd(scale, q.denominator)
        out.append([q.numerator * (scale // q.denominator) for q in row])
    return out


def _bareiss_echelon(rows: list[list[int]]) -> tuple[int, list[int]]:
    """In-place fraction-free row echelon. Returns (rank, pivot columns)."""
    m = len(rows)
    n = len(rows[0]) if m else 0
    piv_cols: list[int] = []
    r = 0
    prev = 1
    for c in range(n):
        p = None
        for i in range(r, m):
            if rows[i][c]:
                p = i
                break
        if p is None:
            continue
        if p != r:
            rows[r], rows[p] = rows[p], rows[r]
        piv = rows[r][c]
        rr = rows[r]
        for i in range(r + 1, m):
            ri = rows[i]
            f = ri[c]
            for j in range(c, n):
                ri[j] = (piv * ri[j] - f * rr[j]) // prev
        prev = piv
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    return r, piv_cols


def rank(M: Matrix) -> int:
    """Exact rank via fraction-free elimination."""
    if M.rows == 0 or M.cols == 0:
        return 0
    r, _ = _bareiss_echelon(_scaled_int_rows(M))
    return r


def solve_square(M: Matrix, rhs: Sequence[Fraction]) -> Vec | None:
    """Solve the square system M x = rhs exactly; None if M is singular."""
    if M.rows != M.cols:
        raise ExactLinError("solve_square: matrix not square")
    if len(rhs) != M.rows:
        raise ExactLinError("solve_square: rhs length mismatch")
    m = M.rows
    if m == 0:
        return ()
    aug = _scaled_int_rows(M, extra=tuple(rhs))
    r, piv_cols = _bareiss_echelon(aug)
    if r < m or any(c >= m for c in piv_cols):
        return None
    x: list[Fraction] = [Fraction(0)] * m
    for i in reversed(range(m)):
        s = Fraction(aug[i][m])
        for j in range(i + 1, m):
            if aug[i][j]:
                s -= aug[i][j] * x[j]
        x[i] = s / aug[i][i]
    return tuple(x)


def solve_basis(M: Matrix, basis: Iterable[int], rhs: Sequence[Fraction]) -> Vec | None:
    """Solve M restricted to `basis` columns; embed into an n-vector.

    Returns None when the basis submatrix is singular. Off-basis coordinates
    of the returned vector are zero.
    """
    basis_t = tuple(sorted(set(basis)))
    if len(basis_t) != M.rows:
        raise ExactLinError(f"basis size {len(basis_t)} != row count {M.rows}")
    if any(j < 0 or j >= M.cols for j in basis_t):
        raise ExactLinError("basis index out of range")
    if len(rhs) != M.rows:
        raise ExactLinError("rhs length mismatch")
    sub = M.submatrix(range(M.rows), basis_t)
    sol = solve_square(sub, rhs)
    if sol is None:
        return None
    x = [Fraction(0)] * M.cols
    for j, value in zip(basis_t, sol):
        x[j] = value
    return tuple(x)


@dataclass(frozen=True)
class RowOp:
    """One elementary row operation; `factor` unused for swaps."""

    kind: Literal["swap", "scale", "addmul"]
    i: int
    j: int = -1
    factor: Fraction = Fraction(0)


@dataclass(frozen=True)
class LinkNormalization:
    """Result of moving a link column into unit form.

    `column_order[k]` is the original index of column k of `matrix`. The row
    operations suffice to replay the transformation on any right-hand side.
    """

    matrix: Matrix
    column_order: tuple[int, ...]
    row_ops: tuple[RowOp, ...]

    def apply_to_rhs(self, rhs: Sequence[Fraction]) -> Vec:
        out = [rat(x) for x in rhs]
        for op in self.row_ops:
            if op.kind == "swap":
                out[op.i], out[op.j] = out[op.j], out[op.i]
            elif op.kind == "scale":
                out[op.i] = out[op.i] * op.factor
            else:
                out[op.i] = out[op.i] + op.factor * out[op.j]
        return tuple(out)


def normalize_link_column(M: Matrix, col: int, position: Literal["last", "first"]) -> LinkNormalization:
    """Make column `col` a unit column at the last (or first) index.

    The output matrix is row-equivalent to M with its columns permuted so
    that `col` sits last (first); the unit entry lands in the last (first)
    row. A zero column is a loop element and is rejected.
    """
    if position not in ("last", "first"):
        raise ExactLinError("position must be 'last' or 'first'")
    if col < 0 or col >= M.cols:
        raise ExactLinError("column index out of range")
    if all(M.entry(i, col) == 0 for i in range(M.rows)):
        raise LoopElementError(f"column {col} is zero (loop element)")

    others = [j for j in range(M.cols) if j != col]
    order = tuple(others + [col]) if position == "last" else tuple([col] + others)
    work = M.with_columns(order).to_rows()
    m = M.rows
    t = M.cols - 1 if position == "last" else 0
    r = m - 1 if position == "last" else 0

    ops: list[RowOp] = []
    if work[r][t] == 0:
        p = next(i for i in range(m) if work[i][t] != 0)
        work[r], work[p] = work[p], work[r]
        ops.append(RowOp("swap", r, p))
    if work[r][t] != 1:
        f = Fraction(1) / work[r][t]
        work[r] = [f * x for x in work[r]]
        ops.append(RowOp("scale", r, factor=f))
    for i in range(m):
        if i != r and work[i][t] != 0:
            g = -work[i][t]
            work[i] = [x + g * y for x, y in zip(work[i], work[r])]
            ops.append(RowOp("addmul", i, r, g))
    return LinkNormalization(Matrix.from_rows(work), order, tuple(ops))


def parse_matrix(text: str) -> Matrix:
    """Parse the matrix text format: `m n` then m lines of n entries."""
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise ExactLinError("empty matrix text")
    head = lines[0].split()
    if len(head) != 2:
        raise ExactLinError(f"bad header line: {lines[0]!r}")
    try:
        m, n = int(head[0]), int(head[1])
    except ValueError as exc:
        raise ExactLinError(f"bad header line: {lines[0]!r}") from exc
    if m < 0 or n < 0 or len(lines) < 1 + m:
        raise ExactLinError("matrix text truncated")
    rows: list[list[Fraction]] = []
    for i in range(m):
        parts = lines[1 + i].split()
        if len(parts) != n:
            raise ExactLinError(f"row {i}: expected {n} entries, got {len(parts)}")
        rows.append([rat(p) for p in parts])
    if m == 0:
        return Matrix(0, n, ())
    return Matrix.from_rows(rows)


def format_matrix(M: Matrix) -> str:
    lines = [f"{M.rows} {M.cols}"]
    for i in range(M.rows):
        lines.append(" ".join(format_rat(x) for x in M.row(i)))
    return "\n".join(lines) + "\n"
