"""Unipotent and nilpotent calculus over prime fields.

Truncated logarithm and exponential for unipotent/nilpotent operators over
F_ell (defined when ell is at least the dimension, since the series
denominators must be invertible), monodromy filtrations with F_ell
coefficients, and the comparison between the reduction of an integral
monodromy filtration and the mod-ell filtration of the reduced operator.
The comparison and the torsion-freeness of the integral cokernels are two
faces of the same condition; the check computes both independently and
insists that they agree.

Arithmetic is exact modular arithmetic on machine integers; moduli are
capped at 2^31, which is far beyond desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from sympy import isprime

from .filtration import (
    MonodromyFiltration,
    NilpotentOperator,
    cokernel_torsion_freeness,
    monodromy_filtration,
)

ModMatrix = tuple[tuple[int, ...], ...]
Subspace = tuple[tuple[int, ...], ...]  # reduced row echelon basis, canonical

_MAX_ELL = 2**31


class ModlError(Exception):
    """Malformed mod-ell input."""


class ModlPreconditionError(ModlError):
    """A stated precondition (such as ell >= dim) is violated."""


class ModlCrossCheckError(Exception):
    """Two routes that must agree produced different answers."""


def _check_prime(ell: int) -> None:
    if ell < 2 or ell >= _MAX_ELL or not isprime(ell):
        raise ModlError(f"modulus {ell} is not a prime below 2^31")


# ---------------------------------------------------------------------------
# F_ell matrix helpers
# ---------------------------------------------------------------------------


def _mod_reduce(matrix, ell: int) -> ModMatrix:
    return tuple(tuple(int(x) % ell for x in row) for row in matrix)


def _mod_identity(n: int) -> ModMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def _mod_mul(a: ModMatrix, b: ModMatrix, ell: int) -> ModMatrix:
    bt = list(zip(*b)) if b else []
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) % ell for col in bt) for row in a
    )


def _mod_is_zero(a: ModMatrix) -> bool:
    return all(x == 0 for row in a for x in row)


def _mod_sub_identity(a: ModMatrix, ell: int) -> ModMatrix:
    return tuple(
        tuple((x - (1 if i == j else 0)) % ell for j, x in enumerate(row))
        for i, row in enumerate(a)
    )


def _mod_add_identity(a: ModMatrix, ell: int) -> ModMatrix:
    return tuple(
        tuple((x + (1 if i == j else 0)) % ell for j, x in enumerate(row))
        for i, row in enumerate(a)
    )


def _rref(rows, ell: int) -> Subspace:
    """Reduced row echelon form over F_ell with zero rows dropped; the
    canonical representative of the row span."""
    work = [list(r) for r in rows]
    if not work:
        return ()
    ncols = len(work[0])
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(work)) if work[i][col] % ell), None)
        if piv is None:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        inv = pow(work[rank][col] % ell, -1, ell)
        work[rank] = [x * inv % ell for x in work[rank]]
        for i in range(len(work)):
            if i != rank and work[i][col] % ell:
                c = work[i][col] % ell
                work[i] = [(x - c * y) % ell for x, y in zip(work[i], work[rank])]
        rank += 1
        if rank == len(work):
            break
    return tuple(tuple(r) for r in work[:rank])


def _kernel_mod(a: ModMatrix, rows: int, cols: int, ell: int) -> list[tuple[int, ...]]:
    """Basis of {x : a @ x = 0} over F_ell."""
    work = [list(r) for r in a]
    pivots: list[int] = []
    rank = 0
    for col in range(cols):
        piv = next((i for i in range(rank, rows) if work[i][col]), None)
        if piv is None:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        inv = pow(work[rank][col], -1, ell)
        work[rank] = [x * inv % ell for x in work[rank]]
        for i in range(rows):
            if i != rank and work[i][col]:
                c = work[i][col]
                work[i] = [(x - c * y) % ell for x, y in zip(work[i], work[rank])]
        pivots.append(col)
        rank += 1
        if rank == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        vec = [0] * cols
        vec[f] = 1
        for r, p in enumerate(pivots):
            vec[p] = (-work[r][f]) % ell
        basis.append(tuple(vec))
    return basis


def _span_columns(vectors, ell: int) -> Subspace:
    """Canonical form of the span of the given vectors."""
    return _rref(list(vectors), ell)


def _in_span(span: Subspace, vec, ell: int) -> bool:
    residue = list(vec)
    for row in span:
        piv = next(i for i, x in enumerate(row) if x)
        if residue[piv] % ell:
            c = residue[piv] % ell
            residue = [(x - c * y) % ell for x, y in zip(residue, row)]
    return all(x % ell == 0 for x in residue)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModlOperator:
    """A unipotent or nilpotent operator on F_ell^dim.

    Unipotence/nilpotence is validated at construction: the dim-th power of
    (matrix - 1), respectively the matrix itself, must vanish.
    """

    ell: int
    dim: int
    matrix: ModMatrix
    kind: str  # "unipotent" | "nilpotent"

    def __post_init__(self) -> None:
        _check_prime(self.ell)
        object.__setattr__(self, "matrix", _mod_reduce(self.matrix, self.ell))
        if len(self.matrix) != self.dim or any(
            len(r) != self.dim for r in self.matrix
        ):
            raise ModlError("matrix shape does not match dim")
        if self.kind == "nilpotent":
            probe = self.matrix
        elif self.kind == "unipotent":
            probe = _mod_sub_identity(self.matrix, self.ell)
        else:
            raise ModlError(f"unknown operator kind {self.kind!r}")
        power = _mod_identity(self.dim)
        for _ in range(self.dim):
            power = _mod_mul(power, probe, self.ell)
        if not _mod_is_zero(power):
            raise ModlError(f"operator is not {self.kind}")

    @classmethod
    def from_integer_matrix(cls, matrix, ell: int, kind: str) -> "ModlOperator":
        m = tuple(tuple(int(x) for x in row) for row in matrix)
        return cls(ell, len(m), m, kind)

    def shifted(self) -> ModMatrix:
        """matrix - 1 for unipotent operators, matrix + 1 for nilpotent."""
        if self.kind == "unipotent":
            return _mod_sub_identity(self.matrix, self.ell)
        return _mod_add_identity(self.matrix, self.ell)


def log_unipotent(u: ModlOperator) -> ModlOperator:
    """Truncated series log(U) = sum_{1<=i<=n-1} (-1)^(i+1)/i (U-1)^i.

    Requires ell >= dim so every series denominator is invertible mod ell.
    """
    if u.kind != "unipotent":
        raise ModlError("log is defined for unipotent operators")
    n, ell = u.dim, u.ell
    if ell < n:
        raise ModlPreconditionError(
            f"log needs ell >= dim, got ell={ell} < dim={n}"
        )
    t = _mod_sub_identity(u.matrix, ell)
    acc = tuple(tuple(0 for _ in range(n)) for _ in range(n))
    power = _mod_identity(n)
    for i in range(1, n):
        power = _mod_mul(power, t, ell)
        coeff = pow(i, -1, ell)
        if i % 2 == 0:
            coeff = (-coeff) % ell
        acc = tuple(
            tuple((x + coeff * y) % ell for x, y in zip(ra, rp))
            for ra, rp in zip(acc, power)
        )
    return ModlOperator(ell, n, acc, "nilpotent")


def exp_nilpotent(m: ModlOperator) -> ModlOperator:
    """Truncated series exp(N) = sum_{0<=i<=n-1} N^i / i!.

    Requires ell >= dim; inverse to log_unipotent.
    """
    if m.kind != "nilpotent":
        raise ModlError("exp is defined for nilpotent operators")
    n, ell = m.dim, m.ell
    if ell < n:
        raise ModlPreconditionError(
            f"exp needs ell >= dim, got ell={ell} < dim={n}"
        )
    acc = _mod_identity(n)
    power = _mod_identity(n)
    factorial = 1
    for i in range(1, n):
        power = _mod_mul(power, m.matrix, ell)
        factorial = factorial * i % ell
        coeff = pow(factorial, -1, ell)
        acc = tuple(
            tuple((x + coeff * y) % ell for x, y in zip(ra, rp))
            for ra, rp in zip(acc, power)
        )
    return ModlOperator(ell, n, acc, "unipotent")


# ---------------------------------------------------------------------------
# monodromy filtration over F_ell
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModlFiltration:
    """Increasing chain of subspaces of F_ell^dim, canonical RREF bases."""

    ell: int
    dim: int
    i_min: int
    i_max: int
    steps: tuple[Subspace, ...]

    def step(self, i: int) -> Subspace:
        if i < self.i_min:
            return ()
        if i > self.i_max:
            return self.steps[-1]
        return self.steps[i - self.i_min]

    def graded_dim(self, i: int) -> int:
        return len(self.step(i)) - len(self.step(i - 1))

    def graded_dims(self) -> dict[int, int]:
        return {
            i: self.graded_dim(i)
            for i in range(self.i_min, self.i_max + 1)
            if self.graded_dim(i)
        }


def _nilpotency_index_mod(a: ModMatrix, n: int, ell: int) -> int:
    if n == 0 or _mod_is_zero(a):
        return 0
    power = a
    d = 1
    while not _mod_is_zero(power):
        power = _mod_mul(power, a, ell)
        d += 1
        if d > n + 1:
            raise ModlError("operator is not nilpotent")
    return d - 1


def _filtration_steps_mod(a: ModMatrix, n: int, ell: int) -> dict[int, Subspace]:
    """The kernel/image induction over F_ell (no saturation needed)."""
    d = _nilpotency_index_mod(a, n, ell)
    full = _rref([tuple(1 if i == j else 0 for j in range(n)) for i in range(n)], ell)
    if d == 0:
        return {0: full}
    top = a
    for _ in range(d - 1):
        top = _mod_mul(top, a, ell)
    ker_rows = _kernel_mod(top, n, n, ell)
    ker_span = _span_columns(ker_rows, ell)
    im_span = _span_columns([tuple(r[j] for r in top) for j in range(n)], ell)

    # complement of im inside ker: greedily extend the echelon of im by
    # kernel vectors; the added vectors lift a basis of ker/im
    lifts: list[tuple[int, ...]] = []
    span_rows = list(im_span)
    for vec in ker_rows:
        if not _in_span(tuple(span_rows), vec, ell):
            lifts.append(vec)
            span_rows = list(_rref(span_rows + [vec], ell))

    basis_cols = [list(c) for c in im_span] + [list(v) for v in lifts]

    def project(vec) -> tuple[int, ...]:
        coords = _solve_mod(basis_cols, vec, ell)
        if coords is None:
            raise ModlCrossCheckError("vector escaped the kernel subspace")
        return tuple(coords[len(im_span):])

    induced_rows = []
    for v in lifts:
        image_vec = tuple(
            sum(a[r][c] * v[c] for c in range(n)) % ell for r in range(n)
        )
        induced_rows.append(project(image_vec))
    # induced_rows[j] is the coordinate vector of a(lift_j), i.e. column j
    q = len(lifts)
    induced = tuple(tuple(row) for row in zip(*induced_rows)) if induced_rows else ()
    inner = _filtration_steps_mod(induced, q, ell)
    inner_d = max(inner.keys()) if inner else 0

    steps: dict[int, Subspace] = {d: full, -d: im_span}
    for i in range(-d + 1, d):
        if i < -inner_d:
            inner_rows: Subspace = ()
        elif i > inner_d:
            inner_rows = inner[inner_d]
        else:
            inner_rows = inner[i]
        lifted = []
        for row in inner_rows:
            vec = [0] * n
            for c, coeff in enumerate(row):
                if coeff:
                    for t in range(n):
                        vec[t] = (vec[t] + coeff * lifts[c][t]) % ell
            lifted.append(tuple(vec))
        steps[i] = _rref(list(im_span) + lifted, ell)
    return steps


def _solve_mod(columns, vec, ell: int):
    """Solve sum_j x_j * columns[j] = vec over F_ell, or None."""
    if not columns:
        return [] if all(x % ell == 0 for x in vec) else None
    n = len(columns[0])
    k = len(columns)
    aug = [[columns[j][i] % ell for j in range(k)] + [vec[i] % ell] for i in range(n)]
    rank = 0
    pivots = []
    for col in range(k):
        piv = next((i for i in range(rank, n) if aug[i][col]), None)
        if piv is None:
            continue
        aug[rank], aug[piv] = aug[piv], aug[rank]
        inv = pow(aug[rank][col], -1, ell)
        aug[rank] = [x * inv % ell for x in aug[rank]]
        for i in range(n):
            if i != rank and aug[i][col]:
                c = aug[i][col]
                aug[i] = [(x - c * y) % ell for x, y in zip(aug[i], aug[rank])]
        pivots.append(col)
        rank += 1
    for i in range(rank, n):
        if aug[i][k] % ell:
            return None
    out = [0] * k
    for r, p in enumerate(pivots):
        out[p] = aug[r][k]
    return out


def nilpotent_filtration_mod_ell(matrix, ell: int) -> ModlFiltration:
    """Monodromy filtration of a nilpotent matrix over F_ell."""
    _check_prime(ell)
    m = _mod_reduce(matrix, ell)
    n = len(m)
    steps = _filtration_steps_mod(m, n, ell)
    d = max(steps.keys())
    return ModlFiltration(
        ell=ell,
        dim=n,
        i_min=-d,
        i_max=d,
        steps=tuple(steps[i] for i in range(-d, d + 1)),
    )


def filtration_mod_ell(u: ModlOperator) -> ModlFiltration:
    """Monodromy filtration of a unipotent operator over F_ell.

    Built from sigma - 1, which needs no lower bound on ell.  When
    ell >= dim the filtration of log(sigma) is computed as well and asserted
    equal: log(sigma) = (sigma - 1) * unit with the unit commuting with
    sigma - 1, so all kernels and images of powers coincide.
    """
    if u.kind != "unipotent":
        raise ModlError("the mod-ell filtration expects a unipotent operator")
    t = _mod_sub_identity(u.matrix, u.ell)
    fil = nilpotent_filtration_mod_ell(t, u.ell)
    if u.ell >= u.dim and u.dim > 0:
        via_log = nilpotent_filtration_mod_ell(log_unipotent(u).matrix, u.ell)
        if via_log != fil:
            raise ModlCrossCheckError(
                "sigma-1 filtration differs from log(sigma) filtration"
            )
    return fil


# ---------------------------------------------------------------------------
# comparison with the integral filtration
# ---------------------------------------------------------------------------


def reduce_filtration(fil: MonodromyFiltration, ell: int) -> ModlFiltration:
    """Reduction mod ell of an integral filtration with saturated steps.

    Because each step is saturated, spanning the reduced Hermite basis gives
    exactly the subspace M_i ⊗ F_ell.
    """
    _check_prime(ell)
    steps = []
    for i in range(fil.i_min, fil.i_max + 1):
        cols = fil.step(i).columns()
        steps.append(_span_columns([tuple(x % ell for x in c) for c in cols], ell))
    return ModlFiltration(
        ell=ell,
        dim=fil.space.rank,
        i_min=fil.i_min,
        i_max=fil.i_max,
        steps=tuple(steps),
    )


@dataclass(frozen=True)
class TfCheckResult:
    """Outcome of the filtration-reduction vs torsion-freeness comparison."""

    ell: int
    holds: bool
    filtrations_agree: bool
    cokernels_ell_torsion_free: bool
    witness: Optional[str]


def property_tf_check(
    op: NilpotentOperator,
    ell: int,
    fil: Optional[MonodromyFiltration] = None,
    cokernels=None,
) -> TfCheckResult:
    """Does the reduction mod ell of the integral monodromy filtration equal
    the mod-ell monodromy filtration of the reduced operator?

    The answer is computed twice: once by comparing subspaces step by step,
    and once by testing whether every coker(N^i) is free of ell-torsion.  The
    two must agree; a mismatch raises.  ``fil`` and ``cokernels`` may be
    passed to reuse cached integral data.
    """
    _check_prime(ell)
    if fil is None:
        fil = monodromy_filtration(op)
    if cokernels is None:
        cokernels = cokernel_torsion_freeness(op)

    reduced = reduce_filtration(fil, ell)
    modfil = nilpotent_filtration_mod_ell(op.matrix, ell)
    lo = min(reduced.i_min, modfil.i_min)
    hi = max(reduced.i_max, modfil.i_max)
    agree = True
    witness = None
    for i in range(lo, hi + 1):
        if reduced.step(i) != modfil.step(i):
            agree = False
            witness = (
                f"step {i}: reduced integral filtration has dimension "
                f"{len(reduced.step(i))}, mod-{ell} filtration has "
                f"{len(modfil.step(i))}"
            )
            break

    torsion_free = True
    tf_witness = None
    for i in sorted(cokernels.keys()):
        for d in cokernels[i].nonzero:
            if d != 1 and d % ell == 0:
                torsion_free = False
                tf_witness = f"coker(N^{i}) has a divisor {d} divisible by {ell}"
                break
        if not torsion_free:
            break

    if agree != torsion_free:
        raise ModlCrossCheckError(
            f"ell={ell}: filtration comparison says {agree} but torsion "
            f"criterion says {torsion_free}"
        )
    return TfCheckResult(
        ell=ell,
        holds=agree,
        filtrations_agree=agree,
        cokernels_ell_torsion_free=torsion_free,
        witness=witness or tf_witness,
    )
