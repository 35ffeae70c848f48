"""Monodromy filtrations of nilpotent integer operators.

Given a nilpotent endomorphism N of a lattice H, there is a unique increasing
filtration {M_i} of the rational span characterized by N(M_i) ⊆ M_{i-2}
together with N^i inducing isomorphisms Gr_i ≅ Gr_{-i} over Q.  This module
constructs its integral model, the chain of saturated sublattices
H ∩ M_{i,Q}, directly by the kernel/image induction with saturation applied
at every inductive step, and derives the integer invariants: elementary
divisors of the induced graded maps, torsion of the cokernels of the powers
N^i, and the finite set of primes at which the two disagree with their
rational shadows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .intlinalg import (
    ElementaryDivisors,
    ExactLinalgError,
    IntMatrix,
    Lattice,
    LatticeMap,
    Sublattice,
    cokernel_invariants,
    freeze,
    image,
    induced_map_divisors,
    kernel,
    mat_apply,
    mat_columns,
    mat_from_columns,
    mat_identity,
    mat_is_zero,
    mat_mul,
    quotient_presentation,
    saturate,
    torsion_primes,
)


class NotNilpotentError(Exception):
    """The supplied endomorphism is not nilpotent."""


class FiltrationCrossCheckError(Exception):
    """An internal identity between two computation routes failed."""


@dataclass(frozen=True)
class NilpotentOperator:
    """A nilpotent endomorphism of a lattice.

    ``nilpotency_index`` is the smallest d >= 0 with N^(d+1) = 0; it is
    validated at construction.  Powers are cached on the instance.
    """

    space: Lattice
    matrix: IntMatrix
    nilpotency_index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", freeze(self.matrix))
        n = self.space.rank
        d = self.nilpotency_index
        powers = _power_chain(self.matrix, n, limit=d + 1)
        if powers is None:
            raise NotNilpotentError("N^(d+1) != 0 for the declared index")
        if len(powers) - 2 != d:
            raise NotNilpotentError("declared nilpotency index is not minimal")
        object.__setattr__(self, "_powers", tuple(powers))

    @classmethod
    def from_matrix(
        cls, matrix, label: Optional[str] = None
    ) -> "NilpotentOperator":
        m = freeze(matrix)
        n = len(m)
        powers = _power_chain(m, n, limit=n + 1)
        if powers is None:
            raise NotNilpotentError("matrix is not nilpotent")
        return cls(Lattice(n, label), m, len(powers) - 2)

    @property
    def map(self) -> LatticeMap:
        return LatticeMap(self.space, self.space, self.matrix)

    def power_matrix(self, i: int) -> IntMatrix:
        powers = getattr(self, "_powers")
        if i < len(powers):
            return powers[i]
        n = self.space.rank
        return tuple(tuple(0 for _ in range(n)) for _ in range(n))

    def power_map(self, i: int) -> LatticeMap:
        return LatticeMap(self.space, self.space, self.power_matrix(i))


def _power_chain(m: IntMatrix, n: int, limit: int) -> Optional[list[IntMatrix]]:
    """[I, N, N^2, ..., N^z] ending at the first zero power N^z, or None if
    no power up to ``limit`` vanishes."""
    if n == 0:
        return [(), ()]
    powers = [mat_identity(n), m]
    while not mat_is_zero(powers[-1]):
        if len(powers) > limit:
            return None
        powers.append(mat_mul(powers[-1], m))
    return powers


@dataclass(frozen=True)
class MonodromyFiltration:
    """Increasing chain of saturated sublattices M_{i_min} ⊆ ... ⊆ M_{i_max}.

    Outside the window the filtration is clamped: zero below i_min, the full
    lattice above i_max.  Each graded piece M_i / M_{i-1} is torsion-free
    because every step is saturated.
    """

    space: Lattice
    i_min: int
    i_max: int
    steps: tuple[Sublattice, ...]

    def __post_init__(self) -> None:
        if len(self.steps) != self.i_max - self.i_min + 1:
            raise ExactLinalgError("filtration window does not match step count")

    def step(self, i: int) -> Sublattice:
        if i < self.i_min:
            return Sublattice.zero(self.space)
        if i > self.i_max:
            return Sublattice.full(self.space)
        return self.steps[i - self.i_min]

    def graded_rank(self, i: int) -> int:
        return self.step(i).rank - self.step(i - 1).rank

    def graded_ranks(self) -> dict[int, int]:
        return {
            i: self.graded_rank(i)
            for i in range(self.i_min, self.i_max + 1)
            if self.graded_rank(i) != 0
        }


def _filtration_steps(a: IntMatrix, n: int) -> dict[int, Sublattice]:
    """Kernel/image induction for the filtration of a nilpotent a on Z^n.

    Returns the saturated steps {M_i} for i in [-d, d].  The recursion peels
    off M_{d-1} = ker(a^d) and M_{-d} = saturation of im(a^d), passes to the
    free quotient ker/im where the induced operator has strictly smaller
    index, and pulls the inner filtration back through the quotient map
    (preimages of saturated subspaces stay saturated).
    """
    ambient = Lattice(n)
    chain = _power_chain(a, n, limit=n + 1)
    if chain is None:
        raise NotNilpotentError("matrix is not nilpotent")
    d = len(chain) - 2
    if d == 0:
        return {0: Sublattice.full(ambient)}
    top_power = LatticeMap(ambient, ambient, chain[d])
    ker_top = kernel(top_power)
    im_top = saturate(image(top_power))
    quot = quotient_presentation(ker_top, im_top)
    induced_cols = [quot.project(mat_apply(a, c)) for c in quot.lift_columns()]
    induced = mat_from_columns(induced_cols, quot.rank)
    inner = _filtration_steps(induced, quot.rank)
    inner_d = max(inner.keys()) if inner else 0

    steps: dict[int, Sublattice] = {}
    steps[d] = Sublattice.full(ambient)
    steps[-d] = im_top
    for i in range(-d + 1, d):
        if i < -inner_d:
            inner_step = Sublattice.zero(Lattice(quot.rank))
        elif i > inner_d:
            inner_step = Sublattice.full(Lattice(quot.rank))
        else:
            inner_step = inner[i]
        lifted = [quot.lift_vector(c) for c in inner_step.columns()]
        cols = mat_columns(im_top.generators) + lifted
        steps[i] = Sublattice.from_columns(ambient, cols)
    return steps


def monodromy_filtration(op: NilpotentOperator) -> MonodromyFiltration:
    """The integral monodromy filtration of a nilpotent operator.

    The steps are the intersections of the lattice with the unique rational
    filtration; they are produced saturated at every inductive step, so no
    final intersection pass is needed.
    """
    steps = _filtration_steps(op.matrix, op.space.rank)
    d = max(steps.keys())
    return MonodromyFiltration(
        space=op.space,
        i_min=-d,
        i_max=d,
        steps=tuple(steps[i] for i in range(-d, d + 1)),
    )


def graded_map_invariants(
    op: NilpotentOperator, fil: MonodromyFiltration, i: int
) -> ElementaryDivisors:
    """Elementary divisors of the induced map N^i : Gr_i -> Gr_{-i}.

    Both graded pieces are torsion-free; bases come from the Hermite forms of
    the saturated steps, so the reported divisors are reproducible.  For i
    outside the window both sides are zero and the list is empty.
    """
    if i < 0:
        raise ValueError("graded map invariants are defined for i >= 0")
    if i > fil.i_max:
        return ElementaryDivisors(())
    source = quotient_presentation(fil.step(i), fil.step(i - 1))
    target = quotient_presentation(fil.step(-i), fil.step(-i - 1))
    power = op.power_matrix(i)
    _, divisors = induced_map_divisors(
        source, target, lambda v: mat_apply(power, v)
    )
    return divisors


def cokernel_torsion_freeness(op: NilpotentOperator) -> dict[int, ElementaryDivisors]:
    """Cokernel invariants of N^i for 0 <= i <= d + 1.

    The entry at d + 1 witnesses the stable regime: beyond the nilpotency
    index every power is zero and the cokernel is the full lattice (all
    divisors zero, no torsion).
    """
    report = {}
    for i in range(op.nilpotency_index + 2):
        report[i] = cokernel_invariants(op.power_map(i))
    return report


@dataclass(frozen=True)
class BadPrimeWitness:
    prime: int
    route: str  # "cokernel" or "graded"
    power: int  # the i with ell-torsion in coker(N^i) / divisor of Gr_i map
    divisor: int


@dataclass(frozen=True)
class BadPrimeReport:
    primes: tuple[int, ...]
    witnesses: tuple[BadPrimeWitness, ...]

    def witnesses_for(self, prime: int) -> tuple[BadPrimeWitness, ...]:
        return tuple(w for w in self.witnesses if w.prime == prime)


def bad_primes_of_nilpotent(op: NilpotentOperator) -> BadPrimeReport:
    """The finite set of primes at which some coker(N^i) has torsion.

    Computed along two routes that must agree (the cokernel invariants of the
    powers, and the elementary divisors of the graded maps); a mismatch means
    a bug and raises.  Witnesses record the responsible power and divisor on
    both routes.
    """
    witnesses: list[BadPrimeWitness] = []
    coker_primes: set[int] = set()
    for i, div in cokernel_torsion_freeness(op).items():
        for p in torsion_primes(div):
            coker_primes.add(p)
        for d in div.nonzero:
            if d != 1:
                for p in torsion_primes(ElementaryDivisors((d,))):
                    witnesses.append(BadPrimeWitness(p, "cokernel", i, d))

    fil = monodromy_filtration(op)
    graded_primes: set[int] = set()
    for i in range(op.nilpotency_index + 1):
        div = graded_map_invariants(op, fil, i)
        for p in torsion_primes(div):
            graded_primes.add(p)
        for d in div.nonzero:
            if d != 1:
                for p in torsion_primes(ElementaryDivisors((d,))):
                    witnesses.append(BadPrimeWitness(p, "graded", i, d))
        if div.zero_count:
            raise FiltrationCrossCheckError(
                f"graded map at level {i} is not a rational isomorphism"
            )

    if coker_primes != graded_primes:
        raise FiltrationCrossCheckError(
            f"cokernel route {sorted(coker_primes)} disagrees with "
            f"graded route {sorted(graded_primes)}"
        )
    return BadPrimeReport(
        primes=tuple(sorted(coker_primes)), witnesses=tuple(witnesses)
    )


def verify_characterizing_properties(
    op: NilpotentOperator, fil: MonodromyFiltration
) -> bool:
    """Check the two defining properties of the filtration exactly.

    Confirms that the steps increase, are saturated, satisfy
    N(M_i) ⊆ M_{i-2}, and that every N^i : Gr_i -> Gr_{-i} is a rational
    isomorphism; used by tests and by callers that want a hard guarantee.
    """
    d = fil.i_max
    if fil.step(fil.i_max).rank != op.space.rank:
        return False
    if fil.step(fil.i_min - 1).rank != 0:
        return False
    for i in range(fil.i_min, fil.i_max + 1):
        cur = fil.step(i)
        if saturate(cur) != cur:
            return False
        if not cur.contains_sublattice(fil.step(i - 1)):
            return False
        mapped = [mat_apply(op.matrix, c) for c in cur.columns()]
        lower = fil.step(i - 2)
        if not all(lower.contains(v) for v in mapped):
            return False
    for i in range(0, d + 1):
        div = graded_map_invariants(op, fil, i)
        src = fil.step(i).rank - fil.step(i - 1).rank
        tgt = fil.step(-i).rank - fil.step(-i - 1).rank
        if src != tgt or div.zero_count:
            return False
    return True
