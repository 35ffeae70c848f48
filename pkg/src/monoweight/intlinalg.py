"""Exact integer linear algebra on lattices.

Everything here is arbitrary-precision integer arithmetic; there is no
floating point anywhere in this module.  Matrices are immutable tuples of
tuples of Python ints, row-major.  A "lattice" is the standard free module
Z^n with a chosen rank; sublattices are stored by column generators in
Hermite form so that equality of sublattices is a syntactic comparison.

The workhorses are the Smith normal form with unimodular transforms (and
their inverses, tracked during reduction), the column Hermite form, and the
derived operations: kernel, image, saturation, cokernel invariants, and
ranks modulo a prime.

A 0 x k matrix is stored as an empty tuple, which cannot carry k; functions
that need exact shapes of such matrices take them explicitly, and the
lattice-level API always knows ranks from the attached lattices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Callable, Iterable, Optional, Sequence

from sympy import primefactors

IntMatrix = tuple[tuple[int, ...], ...]


class ExactLinalgError(Exception):
    """Raised on malformed inputs (shape mismatches, invalid invariants)."""


# ---------------------------------------------------------------------------
# raw matrix helpers
# ---------------------------------------------------------------------------


def freeze(rows: Iterable[Iterable[int]]) -> IntMatrix:
    """Normalize nested iterables of ints into an immutable matrix."""
    if isinstance(rows, tuple) and (not rows or isinstance(rows[0], tuple)):
        out = rows  # already immutable; internal producers only hold ints
    else:
        out = tuple(tuple(int(x) for x in row) for row in rows)
    if out and len(set(map(len, out))) > 1:
        raise ExactLinalgError("ragged matrix rows")
    return out


def mat_shape(m: IntMatrix) -> tuple[int, int]:
    rows = len(m)
    cols = len(m[0]) if rows else 0
    return rows, cols


def mat_identity(n: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def mat_zero(rows: int, cols: int) -> IntMatrix:
    return tuple(tuple(0 for _ in range(cols)) for _ in range(rows))


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    """Product of non-degenerate matrices (no zero dimensions)."""
    ra, ca = mat_shape(a)
    rb, cb = mat_shape(b)
    if ca != rb:
        raise ExactLinalgError(f"shape mismatch in product: {ra}x{ca} by {rb}x{cb}")
    bt = list(zip(*b))
    out = []
    for row in a:
        out.append(tuple(sum(map(_mul, row, col)) for col in bt))
    return tuple(out)


def _mul(x: int, y: int) -> int:
    return x * y


def mat_add(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    if mat_shape(a) != mat_shape(b):
        raise ExactLinalgError("shape mismatch in sum")
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(c: int, a: IntMatrix) -> IntMatrix:
    return tuple(tuple(c * x for x in row) for row in a)


def mat_transpose(a: IntMatrix) -> IntMatrix:
    return tuple(zip(*a)) if a else ()


def mat_is_zero(a: IntMatrix) -> bool:
    return all(x == 0 for row in a for x in row)


def mat_apply(a: IntMatrix, v: Sequence[int]) -> tuple[int, ...]:
    rows, cols = mat_shape(a)
    if rows == 0:
        return ()
    if len(v) != cols:
        raise ExactLinalgError("vector length does not match column count")
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def mat_columns(a: IntMatrix) -> list[tuple[int, ...]]:
    rows, cols = mat_shape(a)
    return [tuple(a[i][j] for i in range(rows)) for j in range(cols)]


def mat_from_columns(cols: Sequence[Sequence[int]], rows: int) -> IntMatrix:
    for c in cols:
        if len(c) != rows:
            raise ExactLinalgError("column length does not match row count")
    return tuple(tuple(int(c[i]) for c in cols) for i in range(rows))


def mat_power(a: IntMatrix, k: int, n: Optional[int] = None) -> IntMatrix:
    rows, cols = mat_shape(a)
    if n is None:
        n = rows
    if rows != cols or rows != n:
        raise ExactLinalgError("matrix power requires a square matrix")
    if k < 0:
        raise ExactLinalgError("negative matrix power")
    if n == 0:
        return ()
    result = mat_identity(n)
    for _ in range(k):
        result = mat_mul(result, a)
    return result


def mat_det(a: IntMatrix) -> int:
    """Exact determinant via fraction-free Bareiss elimination."""
    n, cols = mat_shape(a)
    if n != cols:
        raise ExactLinalgError("determinant requires a square matrix")
    if n == 0:
        return 1
    m = [list(row) for row in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lattice:
    """A free Z-module of the given rank with the standard basis."""

    rank: int
    label: Optional[str] = None

    def __post_init__(self) -> None:
        if self.rank < 0:
            raise ExactLinalgError("lattice rank must be non-negative")

    def __repr__(self) -> str:
        if self.label:
            return f"Lattice({self.rank}, {self.label!r})"
        return f"Lattice({self.rank})"


@dataclass(frozen=True)
class LatticeMap:
    """An integer matrix viewed as a map source -> target.

    The matrix has shape (target.rank x source.rank) and acts on column
    vectors.
    """

    source: Lattice
    target: Lattice
    matrix: IntMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", freeze(self.matrix))
        rows, cols = mat_shape(self.matrix)
        if rows != self.target.rank or (rows > 0 and cols != self.source.rank):
            raise ExactLinalgError(
                f"matrix shape {rows}x{cols} does not match map "
                f"{self.target.rank}x{self.source.rank}"
            )

    @classmethod
    def from_matrix(cls, matrix: Iterable[Iterable[int]]) -> "LatticeMap":
        m = freeze(matrix)
        rows, cols = mat_shape(m)
        return cls(Lattice(cols), Lattice(rows), m)

    @classmethod
    def identity(cls, lattice: Lattice) -> "LatticeMap":
        return cls(lattice, lattice, mat_identity(lattice.rank))

    @classmethod
    def zero(cls, source: Lattice, target: Lattice) -> "LatticeMap":
        return cls(source, target, mat_zero(target.rank, source.rank))

    def __matmul__(self, other: "LatticeMap") -> "LatticeMap":
        if other.target.rank != self.source.rank:
            raise ExactLinalgError("composition rank mismatch")
        if 0 in (self.source.rank, self.target.rank, other.source.rank):
            return LatticeMap.zero(other.source, self.target)
        return LatticeMap(other.source, self.target, mat_mul(self.matrix, other.matrix))

    def __add__(self, other: "LatticeMap") -> "LatticeMap":
        if self.source != other.source or self.target != other.target:
            raise ExactLinalgError("sum of maps with different endpoints")
        return LatticeMap(self.source, self.target, mat_add(self.matrix, other.matrix))

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        if self.source.rank != len(v):
            raise ExactLinalgError("vector length does not match source rank")
        return mat_apply(self.matrix, v)

    def power(self, k: int) -> "LatticeMap":
        if self.source != self.target:
            raise ExactLinalgError("powers require an endomorphism")
        return LatticeMap(
            self.source, self.target, mat_power(self.matrix, k, self.source.rank)
        )

    def is_zero(self) -> bool:
        return mat_is_zero(self.matrix)

    def rational_rank(self) -> int:
        return _smith_reduce(
            self.matrix, self.target.rank, self.source.rank, want=frozenset()
        ).rank


@dataclass(frozen=True)
class ElementaryDivisors:
    """Diagonal invariants d_1 | d_2 | ... with zeros allowed at the end.

    Zeros record rank defect; every nonzero d_i divides the next nonzero one.
    """

    divisors: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "divisors", tuple(int(d) for d in self.divisors))
        seen_zero = False
        for i, d in enumerate(self.divisors):
            if d < 0:
                raise ExactLinalgError("elementary divisors must be non-negative")
            if d == 0:
                seen_zero = True
            elif seen_zero:
                raise ExactLinalgError("zero divisors must come last")
            elif i + 1 < len(self.divisors) and self.divisors[i + 1] != 0:
                if self.divisors[i + 1] % d != 0:
                    raise ExactLinalgError(
                        f"divisor chain broken: {d} does not divide "
                        f"{self.divisors[i + 1]}"
                    )

    @property
    def nonzero(self) -> tuple[int, ...]:
        return tuple(d for d in self.divisors if d != 0)

    @property
    def zero_count(self) -> int:
        return len(self.divisors) - len(self.nonzero)

    def is_torsion_free(self) -> bool:
        """True when the module these invariants present has no torsion."""
        return all(d == 1 for d in self.nonzero)


@dataclass(frozen=True)
class Sublattice:
    """A sublattice of the ambient lattice, spanned by the columns of
    ``generators`` and stored in column Hermite form (zero columns dropped).

    Two sublattices of the same ambient are equal iff they are the same
    subgroup, because the Hermite form is unique.
    """

    ambient: Lattice
    generators: IntMatrix

    def __post_init__(self) -> None:
        g = freeze(self.generators)
        rows, _ = mat_shape(g)
        if rows != self.ambient.rank:
            raise ExactLinalgError("generator rows do not match ambient rank")
        object.__setattr__(self, "generators", hermite_column_form(g))

    @classmethod
    def from_columns(
        cls, ambient: Lattice, cols: Sequence[Sequence[int]]
    ) -> "Sublattice":
        return cls(ambient, mat_from_columns(cols, ambient.rank))

    @classmethod
    def zero(cls, ambient: Lattice) -> "Sublattice":
        return cls(ambient, mat_zero(ambient.rank, 0))

    @classmethod
    def full(cls, ambient: Lattice) -> "Sublattice":
        return cls(ambient, mat_identity(ambient.rank))

    @property
    def rank(self) -> int:
        return mat_shape(self.generators)[1]

    def columns(self) -> list[tuple[int, ...]]:
        return mat_columns(self.generators)

    def contains(self, v: Sequence[int]) -> bool:
        return self.coordinates(v) is not None

    def coordinates(self, v: Sequence[int]) -> Optional[tuple[int, ...]]:
        """Integer coordinates of ``v`` in the stored basis, or None."""
        return _solve_echelon_columns(self.generators, v)

    def contains_sublattice(self, other: "Sublattice") -> bool:
        if self.ambient != other.ambient:
            raise ExactLinalgError("sublattices live in different ambients")
        return all(self.contains(c) for c in other.columns())

    def is_full(self) -> bool:
        return self.rank == self.ambient.rank and self.contains_sublattice(
            Sublattice.full(self.ambient)
        )


# ---------------------------------------------------------------------------
# Hermite form
# ---------------------------------------------------------------------------


def _row_hermite(rows: list[list[int]]) -> list[list[int]]:
    """In-place row Hermite form: echelon with positive pivots and entries
    above each pivot reduced into [0, pivot).  Zero rows are dropped.
    Deterministic, so the output is the unique HNF of the row span.
    """
    if not rows:
        return []
    nrows = len(rows)
    ncols = len(rows[0])
    pivot_row = 0
    for col in range(ncols):
        # Euclidean elimination below pivot_row in this column.
        while True:
            nonzero = [i for i in range(pivot_row, nrows) if rows[i][col] != 0]
            if not nonzero:
                break
            best = min(nonzero, key=lambda i: (abs(rows[i][col]), i))
            if best != pivot_row:
                rows[pivot_row], rows[best] = rows[best], rows[pivot_row]
            p = rows[pivot_row][col]
            done = True
            for i in range(pivot_row + 1, nrows):
                if rows[i][col] != 0:
                    q = rows[i][col] // p
                    rows[i] = [x - q * y for x, y in zip(rows[i], rows[pivot_row])]
                    if rows[i][col] != 0:
                        done = False
            if done:
                break
        if pivot_row < nrows and rows[pivot_row][col] != 0:
            if rows[pivot_row][col] < 0:
                rows[pivot_row] = [-x for x in rows[pivot_row]]
            p = rows[pivot_row][col]
            for i in range(pivot_row):
                q = rows[i][col] // p
                if q:
                    rows[i] = [x - q * y for x, y in zip(rows[i], rows[pivot_row])]
            pivot_row += 1
            if pivot_row == nrows:
                break
    return rows[:pivot_row]


def hermite_column_form(m: IntMatrix) -> IntMatrix:
    """Unique column Hermite form of the column span; zero columns dropped."""
    rows, cols = mat_shape(m)
    if rows == 0:
        return ()
    if cols == 0:
        return mat_zero(rows, 0)
    work = [list(col) for col in zip(*m)]  # columns as rows
    reduced = _row_hermite(work)
    if not reduced:
        return mat_zero(rows, 0)
    return tuple(tuple(row[i] for row in reduced) for i in range(rows))


def _solve_echelon_columns(g: IntMatrix, v: Sequence[int]) -> Optional[tuple[int, ...]]:
    """Solve g @ x = v for integer x where g is in column Hermite form
    (independent columns, pivot rows strictly increasing)."""
    rows, cols = mat_shape(g)
    if len(v) != rows:
        raise ExactLinalgError("vector length does not match ambient rank")
    residue = list(v)
    coords = []
    for j in range(cols):
        pivot = next(i for i in range(rows) if g[i][j] != 0)
        if residue[pivot] % g[pivot][j] != 0:
            return None
        c = residue[pivot] // g[pivot][j]
        coords.append(c)
        if c:
            for i in range(rows):
                residue[i] -= c * g[i][j]
    if any(residue):
        return None
    return tuple(coords)


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmithNormalForm:
    """U @ A @ V = D with U, V unimodular and D diagonal with the divisor
    chain d_1 | d_2 | ... (zeros last).  The inverses of U and V are tracked
    during reduction so downstream code never inverts a matrix.
    """

    u: IntMatrix
    v: IntMatrix
    d: IntMatrix
    u_inv: IntMatrix
    v_inv: IntMatrix
    divisors: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len([x for x in self.divisors if x != 0])


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """g, s, t with s*a + t*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


_TRACK_ALL = frozenset({"u", "ui", "v", "vi"})


def _smith_reduce(
    a: IntMatrix, rows: int, cols: int, want: frozenset = _TRACK_ALL
) -> SmithNormalForm:
    m = [list(r) for r in a]
    track_u = "u" in want
    track_ui = "ui" in want
    track_v = "v" in want
    track_vi = "vi" in want
    u = [list(r) for r in mat_identity(rows)] if track_u else None
    ui = [list(r) for r in mat_identity(rows)] if track_ui else None
    v = [list(r) for r in mat_identity(cols)] if track_v else None
    vi = [list(r) for r in mat_identity(cols)] if track_vi else None

    # Row ops act on m and u on the left; ui picks up the inverse op on its
    # columns so u @ ui = I throughout.  Dually for columns with v and vi.
    def row_swap(i, j):
        m[i], m[j] = m[j], m[i]
        if track_u:
            u[i], u[j] = u[j], u[i]
        if track_ui:
            for r in ui:
                r[i], r[j] = r[j], r[i]

    def row_add(i, j, c):  # row_i += c * row_j
        m[i] = [x + c * y for x, y in zip(m[i], m[j])]
        if track_u:
            u[i] = [x + c * y for x, y in zip(u[i], u[j])]
        if track_ui:
            for r in ui:
                r[j] -= c * r[i]

    def row_neg(i):
        m[i] = [-x for x in m[i]]
        if track_u:
            u[i] = [-x for x in u[i]]
        if track_ui:
            for r in ui:
                r[i] = -r[i]

    def col_swap(i, j):
        for r in m:
            r[i], r[j] = r[j], r[i]
        if track_v:
            for r in v:
                r[i], r[j] = r[j], r[i]
        if track_vi:
            vi[i], vi[j] = vi[j], vi[i]

    def col_add(i, j, c):  # col_i += c * col_j
        for r in m:
            r[i] += c * r[j]
        if track_v:
            for r in v:
                r[i] += c * r[j]
        if track_vi:
            vi[j] = [x - c * y for x, y in zip(vi[j], vi[i])]

    n = min(rows, cols)
    t = 0
    while t < n:
        # deterministic pivot: smallest |entry| over the trailing block,
        # ties broken by (row, column) order
        pivot = None
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                x = m[i][j]
                if x != 0 and (best is None or abs(x) < best):
                    best = abs(x)
                    pivot = (i, j)
                    if best == 1:
                        break
            if best == 1:
                break
        if pivot is None:
            break
        if pivot[0] != t:
            row_swap(t, pivot[0])
        if pivot[1] != t:
            col_swap(t, pivot[1])
        while True:
            for i in range(t + 1, rows):
                if m[i][t] != 0:
                    q = m[i][t] // m[t][t]
                    row_add(i, t, -q)
                    if m[i][t] != 0:
                        row_swap(i, t)
            if any(m[i][t] != 0 for i in range(t + 1, rows)):
                continue
            for j in range(t + 1, cols):
                if m[t][j] != 0:
                    q = m[t][j] // m[t][t]
                    col_add(j, t, -q)
                    if m[t][j] != 0:
                        col_swap(j, t)
            if any(m[t][j] != 0 for j in range(t + 1, cols)):
                continue
            if any(m[i][t] != 0 for i in range(t + 1, rows)):
                continue
            break
        if m[t][t] < 0:
            row_neg(t)
        t += 1

    # Enforce the divisibility chain.  diag(a, b) with b % a != 0 becomes
    # diag(g, lcm) via a determinant-one 2x2 pair; g < a strictly, so the
    # sweep terminates.
    changed = True
    while changed:
        changed = False
        for i in range(t - 1):
            a_, b_ = m[i][i], m[i + 1][i + 1]
            if b_ % a_ != 0:
                changed = True
                g, s_, t_ = _xgcd(a_, b_)
                j = i + 1
                # P = [[s, t], [-b/g, a/g]], Q = [[1, -t*b/g], [1, s*a/g]]:
                # P @ diag(a, b) @ Q = diag(g, a*b/g)
                _rows_2x2(m, u, ui, i, j, s_, t_, -(b_ // g), a_ // g)
                _cols_2x2(m, v, vi, i, j, 1, 1, -(t_ * b_ // g), s_ * a_ // g)
    divisors = tuple(m[i][i] for i in range(n))
    empty = ()
    return SmithNormalForm(
        u=freeze(u) if track_u else empty,
        v=freeze(v) if track_v else empty,
        d=freeze(m),
        u_inv=freeze(ui) if track_ui else empty,
        v_inv=freeze(vi) if track_vi else empty,
        divisors=divisors,
    )


def _rows_2x2(m, u, ui, i, j, p00, p01, p10, p11):
    """rows (i, j) of m and u <- [[p00, p01], [p10, p11]] @ rows.

    The transform must have determinant 1; ui's columns pick up the inverse.
    """
    m[i], m[j] = (
        [p00 * x + p01 * y for x, y in zip(m[i], m[j])],
        [p10 * x + p11 * y for x, y in zip(m[i], m[j])],
    )
    if u is not None:
        u[i], u[j] = (
            [p00 * x + p01 * y for x, y in zip(u[i], u[j])],
            [p10 * x + p11 * y for x, y in zip(u[i], u[j])],
        )
    if ui is not None:
        for r in ui:
            r[i], r[j] = p11 * r[i] - p10 * r[j], -p01 * r[i] + p00 * r[j]


def _cols_2x2(m, v, vi, i, j, q00, q10, q01, q11):
    """cols (i, j) of m and v <- cols @ [[q00, q01], [q10, q11]].

    The transform must have determinant 1; vi's rows pick up the inverse.
    """
    for r in m:
        r[i], r[j] = q00 * r[i] + q10 * r[j], q01 * r[i] + q11 * r[j]
    if v is not None:
        for r in v:
            r[i], r[j] = q00 * r[i] + q10 * r[j], q01 * r[i] + q11 * r[j]
    if vi is not None:
        vi[i], vi[j] = (
            [q11 * x - q01 * y for x, y in zip(vi[i], vi[j])],
            [-q10 * x + q00 * y for x, y in zip(vi[i], vi[j])],
        )


def smith_normal_form(m: LatticeMap) -> SmithNormalForm:
    """Smith normal form of the map's matrix: U @ A @ V = D exactly."""
    return _smith_reduce(m.matrix, m.target.rank, m.source.rank)


# ---------------------------------------------------------------------------
# derived operations
# ---------------------------------------------------------------------------


def kernel(m: LatticeMap) -> Sublattice:
    """The saturated kernel sublattice {x in source : m(x) = 0}."""
    snf = _smith_reduce(m.matrix, m.target.rank, m.source.rank, want=frozenset({"v"}))
    r = snf.rank
    cols_v = mat_columns(snf.v)
    return Sublattice.from_columns(m.source, cols_v[r : m.source.rank])


def image(m: LatticeMap) -> Sublattice:
    """The image sublattice in the target (not saturated), Hermite-reduced."""
    return Sublattice(m.target, m.matrix)


def saturate(s: Sublattice) -> Sublattice:
    """The saturation {x in ambient : k*x in s for some k >= 1}.

    From U @ G @ V = D, the first rank columns of U^{-1} extend to a basis of
    the ambient lattice and span the rational span of G intersected with it.
    """
    rows, cols = mat_shape(s.generators)
    snf = _smith_reduce(s.generators, s.ambient.rank, cols, want=frozenset({"ui"}))
    r = snf.rank
    cols_uinv = mat_columns(snf.u_inv)
    return Sublattice.from_columns(s.ambient, cols_uinv[:r])


def cokernel_invariants(m: LatticeMap) -> ElementaryDivisors:
    """Elementary divisors of target/image, padded with zeros to the full
    target rank, so the cokernel reads off as a direct sum of Z/d_i (with
    d = 0 meaning a free summand Z)."""
    snf = _smith_reduce(m.matrix, m.target.rank, m.source.rank, want=frozenset())
    nonzero = tuple(d for d in snf.divisors if d != 0)
    return ElementaryDivisors(nonzero + (0,) * (m.target.rank - len(nonzero)))


def map_divisors(m: LatticeMap) -> ElementaryDivisors:
    """Elementary divisors of the matrix itself (length min of the ranks)."""
    snf = _smith_reduce(m.matrix, m.target.rank, m.source.rank, want=frozenset())
    return ElementaryDivisors(snf.divisors)


def torsion_primes(e: ElementaryDivisors) -> tuple[int, ...]:
    """The primes dividing some divisor outside {0, 1}, sorted."""
    primes: set[int] = set()
    for d in e.nonzero:
        if d != 1:
            primes.update(primefactors(d))
    return tuple(sorted(primes))


def rank_mod_ell(m: LatticeMap, ell: int) -> int:
    """Rank of the matrix over F_ell, by modular Gaussian elimination."""
    if ell < 2:
        raise ExactLinalgError("modulus must be a prime >= 2")
    rows, cols = m.target.rank, m.source.rank
    work = [[x % ell for x in row] for row in m.matrix]
    rank = 0
    for col in range(cols):
        pivot = next((i for i in range(rank, rows) if work[i][col]), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        inv = pow(work[rank][col], -1, ell)
        work[rank] = [(x * inv) % ell for x in work[rank]]
        for i in range(rows):
            if i != rank and work[i][col]:
                c = work[i][col]
                work[i] = [(x - c * y) % ell for x, y in zip(work[i], work[rank])]
        rank += 1
        if rank == rows:
            break
    return rank


# ---------------------------------------------------------------------------
# sublattice arithmetic, solvers, quotients
# ---------------------------------------------------------------------------


def sublattice_sum(a: Sublattice, b: Sublattice) -> Sublattice:
    if a.ambient != b.ambient:
        raise ExactLinalgError("sublattices live in different ambients")
    cols = mat_columns(a.generators) + mat_columns(b.generators)
    return Sublattice.from_columns(a.ambient, cols)


def sublattice_intersection(a: Sublattice, b: Sublattice) -> Sublattice:
    """Intersection of column spans: solve G_a x = G_b y via the kernel of
    the block matrix [G_a | -G_b]."""
    if a.ambient != b.ambient:
        raise ExactLinalgError("sublattices live in different ambients")
    ka = a.rank
    cols = mat_columns(a.generators) + [
        tuple(-x for x in c) for c in mat_columns(b.generators)
    ]
    block = LatticeMap(
        Lattice(ka + b.rank), a.ambient, mat_from_columns(cols, a.ambient.rank)
    )
    ker = kernel(block)
    vecs = [mat_apply(a.generators, c[:ka]) for c in ker.columns()]
    if not vecs:
        return Sublattice.zero(a.ambient)
    return Sublattice.from_columns(a.ambient, vecs)


class ColumnSolver:
    """Exact solver for B @ x = w with a fixed integer matrix B.

    Precomputes the Smith form of B; each solve costs two matrix-vector
    products plus divisibility checks.
    """

    def __init__(self, b: IntMatrix, rows: int, cols: int):
        self._rows = rows
        self._cols = cols
        self._snf = _smith_reduce(b, rows, cols, want=frozenset({"u", "v"}))

    def solve(self, w: Sequence[int]) -> Optional[tuple[int, ...]]:
        if len(w) != self._rows:
            raise ExactLinalgError("right-hand side has the wrong length")
        snf = self._snf
        uw = mat_apply(snf.u, w)
        y = [0] * self._cols
        for j in range(min(self._rows, self._cols)):
            d = snf.divisors[j]
            if d == 0:
                break
            if uw[j] % d != 0:
                return None
            y[j] = uw[j] // d
        r = snf.rank
        if any(uw[j] != 0 for j in range(r, self._rows)):
            return None
        return mat_apply(snf.v, y)


@dataclass(frozen=True)
class QuotientPresentation:
    """Explicit basis data for outer/inner with inner saturated in outer.

    ``lift`` holds ambient vectors whose classes form a basis of the free
    quotient; ``project`` maps an ambient vector of outer to its quotient
    coordinates.  Every x in outer decomposes as
    inner-part + lift @ project(x).
    """

    outer: Sublattice
    inner: Sublattice
    lift: IntMatrix  # ambient_rank x quotient_rank
    _solver: ColumnSolver = field(repr=False, compare=False)

    @property
    def rank(self) -> int:
        return mat_shape(self.lift)[1] if self.outer.ambient.rank else 0

    def project(self, v: Sequence[int]) -> tuple[int, ...]:
        coords = self._solver.solve(v)
        if coords is None:
            raise ExactLinalgError("vector not in the outer sublattice")
        return coords[self.inner.rank :]

    def lift_vector(self, q: Sequence[int]) -> tuple[int, ...]:
        if self.outer.ambient.rank == 0:
            return ()
        return mat_apply(self.lift, q)

    def lift_columns(self) -> list[tuple[int, ...]]:
        return mat_columns(self.lift)


def quotient_presentation(outer: Sublattice, inner: Sublattice) -> QuotientPresentation:
    """Present the free quotient outer/inner by a lifted basis.

    Requires inner ⊆ outer with inner saturated in outer (torsion-free
    quotient); raises otherwise.  Expresses inner in the basis of outer,
    Smith-reduces the coordinate matrix (all invariants must be 1), and takes
    the complementary columns of U^{-1} as quotient lifts.
    """
    if outer.ambient != inner.ambient:
        raise ExactLinalgError("sublattices live in different ambients")
    coord_cols = []
    for c in inner.columns():
        coords = outer.coordinates(c)
        if coords is None:
            raise ExactLinalgError("inner sublattice not contained in outer")
        coord_cols.append(coords)
    coord = mat_from_columns(coord_cols, outer.rank)
    snf = _smith_reduce(coord, outer.rank, inner.rank, want=frozenset({"ui"}))
    if snf.rank != inner.rank or any(d not in (0, 1) for d in snf.divisors):
        raise ExactLinalgError("inner sublattice not saturated in outer")
    uinv_cols = mat_columns(snf.u_inv)
    lift_cols = [
        mat_apply(outer.generators, c) for c in uinv_cols[inner.rank :]
    ]
    ambient_rank = outer.ambient.rank
    basis = mat_from_columns(mat_columns(inner.generators) + lift_cols, ambient_rank)
    solver = ColumnSolver(basis, ambient_rank, outer.rank)
    lift = mat_from_columns(lift_cols, ambient_rank)
    return QuotientPresentation(outer=outer, inner=inner, lift=lift, _solver=solver)


def induced_map_divisors(
    source: QuotientPresentation,
    target: QuotientPresentation,
    operator: Callable[[Sequence[int]], Sequence[int]],
) -> tuple[IntMatrix, ElementaryDivisors]:
    """Matrix and elementary divisors of the map induced on free quotients.

    ``operator`` must send the outer sublattice of ``source`` into the outer
    sublattice of ``target`` and inner into inner; the induced matrix is
    expressed in the two lifted quotient bases.  Divisors are padded with
    zeros up to the target quotient rank (cokernel convention).
    """
    cols = [target.project(operator(c)) for c in source.lift_columns()]
    matrix = mat_from_columns(cols, target.rank)
    lm = LatticeMap(Lattice(source.rank), Lattice(target.rank), matrix)
    return matrix, cokernel_invariants(lm)
