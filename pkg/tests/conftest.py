"""Shared fixtures and corpus builders for the test suite."""

import random
from math import gcd

from monoweight.intlinalg import (
    Lattice,
    LatticeMap,
    Sublattice,
    kernel,
    mat_apply,
    mat_columns,
    mat_identity,
    mat_mul,
    mat_power,
    saturate,
    sublattice_intersection,
    sublattice_sum,
)
from monoweight.filtration import NilpotentOperator

SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]


def jordan_nilpotent(blocks):
    """Block-diagonal nilpotent from (size, entries) pairs.

    ``blocks`` is a list of tuples (s, entries) where entries has length
    s - 1 and fills the superdiagonal of that block.
    """
    n = sum(s for s, _ in blocks)
    m = [[0] * n for _ in range(n)]
    offset = 0
    for s, entries in blocks:
        assert len(entries) == s - 1
        for t, a in enumerate(entries):
            m[offset + t][offset + t + 1] = a
        offset += s
    return tuple(tuple(row) for row in m)


def jordan_graded_ranks(sizes):
    """Graded ranks of the filtration of a Jordan-type nilpotent: a block of
    size s contributes 1 at each i in {-(s-1), -(s-3), ..., s-1}."""
    ranks = {}
    for s in sizes:
        for i in range(-(s - 1), s, 2):
            ranks[i] = ranks.get(i, 0) + 1
    return {i: r for i, r in ranks.items() if r}


def random_partition(rng, n):
    sizes = []
    left = n
    while left:
        s = rng.randint(1, left)
        sizes.append(s)
        left -= s
    sizes.sort(reverse=True)
    return sizes


def random_unimodular(rng, n, shears=None, entry_bound=20, conjugand=None):
    """A unimodular U (with inverse) built from shears and permutations.

    When ``conjugand`` is given, shears are retried so that the conjugate
    U @ conjugand @ U^{-1} keeps entries bounded by ``entry_bound``.
    """
    u = [list(r) for r in mat_identity(n)]
    ui = [list(r) for r in mat_identity(n)]

    def shear(i, j, c):
        # U <- E_ij(c) U ;  U^{-1} <- U^{-1} E_ij(-c)
        u[i] = [x + c * y for x, y in zip(u[i], u[j])]
        for r in ui:
            r[j] -= c * r[i]

    def swap(i, j):
        u[i], u[j] = u[j], u[i]
        for r in ui:
            r[i], r[j] = r[j], r[i]

    count = shears if shears is not None else n
    applied = 0
    attempts = 0
    while applied < count and attempts < 40:
        attempts += 1
        i, j = rng.randrange(n), rng.randrange(n)
        if i == j:
            continue
        c = rng.choice([-1, 1])
        if rng.random() < 0.25:
            swap(i, j)
            applied += 1
            continue
        shear(i, j, c)
        if conjugand is not None:
            conj = mat_mul(mat_mul(tuple(map(tuple, u)), conjugand),
                           tuple(map(tuple, ui)))
            if max((abs(x) for row in conj for x in row), default=0) > entry_bound:
                shear(i, j, -c)  # undo
                continue
        applied += 1
    return tuple(map(tuple, u)), tuple(map(tuple, ui))


def random_nilpotent_corpus(seed, count, max_size=8, entry_choices=(1, 2, 3)):
    """Corpus of conjugated Jordan-type nilpotents with bounded entries.

    Yields (operator, sizes) where sizes is the Jordan type, giving an
    independent oracle for the graded ranks.
    """
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(1, max_size)
        sizes = random_partition(rng, n)
        blocks = [
            (s, [rng.choice(entry_choices) for _ in range(s - 1)]) for s in sizes
        ]
        base = jordan_nilpotent(blocks)
        u, ui = random_unimodular(rng, n, shears=rng.randint(0, n), conjugand=base)
        conj = mat_mul(mat_mul(u, base), ui)
        if max((abs(x) for row in conj for x in row), default=0) > 20:
            continue
        out.append((NilpotentOperator.from_matrix(conj), sizes))
    return out


def rational_filtration_oracle(op):
    """Closed-formula oracle for the integral filtration:
    M_k = sat( sum over j >= max(0, -k) of ker(N^(k+j+1)) ∩ sat(im(N^j)) ).

    Entirely independent of the inductive construction.
    """
    n = op.space.rank
    ambient = Lattice(n)
    d = op.nilpotency_index
    powers = [mat_power(op.matrix, i, n) for i in range(2 * d + 3)]

    def power_map(i):
        i = min(i, 2 * d + 2)
        return LatticeMap(ambient, ambient, powers[i])

    steps = {}
    for k in range(-d, d + 1):
        total = Sublattice.zero(ambient)
        for j in range(max(0, -k), d + 1):
            ker_part = kernel(power_map(k + j + 1))
            im_part = saturate(_image_sub(power_map(j)))
            piece = sublattice_intersection(ker_part, im_part)
            total = sublattice_sum(total, piece)
        steps[k] = saturate(total)
    return steps


def _image_sub(m):
    return Sublattice(m.target, m.matrix)
