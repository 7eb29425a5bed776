"""Exact linear algebra: worked examples and randomized invariants."""

import random
from fractions import Fraction

import pytest

from bldim.exactla import (
    QMatrix,
    QSubspace,
    image_dim,
    kernel_basis,
    lattice_closure,
    matrix_from_text,
    matrix_to_text,
    rank,
    subspace_intersect,
    subspace_sum,
)

DROP_Z = QMatrix.from_rows([[1, 0, 0], [0, 1, 0]])


def rand_matrix(rng, rows, cols):
    return QMatrix.from_rows(
        [[Fraction(rng.randint(-5, 5), rng.randint(1, 5)) for _ in range(cols)]
         for _ in range(rows)])


def rand_subspace(rng, d):
    k = rng.randint(0, d)
    if k == 0:
        return QSubspace.zero(d)
    vectors = [[Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(d)]
               for _ in range(k)]
    return QSubspace.from_vectors(d, vectors)


def test_rank_examples():
    assert rank(QMatrix.identity(3)) == 3
    assert rank(DROP_Z) == 2
    assert rank(QMatrix.from_rows([[1, 1, 1]])) == 1


def test_kernel_examples():
    assert kernel_basis(DROP_Z) == QSubspace.span([0, 0, 1])
    assert kernel_basis(QMatrix.identity(3)) == QSubspace.zero(3)
    assert kernel_basis(QMatrix.from_rows([[1, 1]])) == QSubspace.span([1, -1])


def test_subspace_sum_examples():
    e1 = QSubspace.span([1, 0, 0])
    e2 = QSubspace.span([0, 1, 0])
    assert subspace_sum(e1, e2) == QSubspace.from_vectors(3, [[1, 0, 0], [0, 1, 0]])
    v = QSubspace.span([2, 3, 5])
    assert subspace_sum(v, QSubspace.zero(3)) == v
    assert subspace_sum(e1, e1) == e1


def test_subspace_intersect_examples():
    e12 = QSubspace.from_vectors(3, [[1, 0, 0], [0, 1, 0]])
    e23 = QSubspace.from_vectors(3, [[0, 1, 0], [0, 0, 1]])
    assert subspace_intersect(e12, e23) == QSubspace.span([0, 1, 0])
    assert subspace_intersect(e12, e12) == e12
    e1 = QSubspace.span([1, 0, 0])
    e2 = QSubspace.span([0, 1, 0])
    assert subspace_intersect(e1, e2) == QSubspace.zero(3)


def test_image_dim_examples():
    assert image_dim(DROP_Z, QSubspace.span([0, 0, 1])) == 0
    assert image_dim(DROP_Z, QSubspace.full(3)) == 2
    assert image_dim(QMatrix.from_rows([[1, 1, 1]]), QSubspace.span([1, -1, 0])) == 0


def test_image_dim_shape_mismatch():
    with pytest.raises(ValueError):
        image_dim(DROP_Z, QSubspace.full(2))


def test_lattice_closure_coordinate_kernels():
    # Kernels of the three coordinate-plane projections are the three axes;
    # the closure is the full coordinate subspace lattice of Q^3.
    seeds = [QSubspace.span([0, 0, 1]), QSubspace.span([0, 1, 0]), QSubspace.span([1, 0, 0])]
    result = lattice_closure(seeds)
    assert not result.truncated
    assert len(result.subspaces) == 8
    dims = sorted(s.dim for s in result.subspaces)
    assert dims == [0, 1, 1, 1, 2, 2, 2, 3]


def test_lattice_closure_trivial_seeds():
    only_zero = lattice_closure([QSubspace.zero(4)])
    assert not only_zero.truncated
    assert {s.dim for s in only_zero.subspaces} == {0, 4}
    assert len(only_zero.subspaces) == 2

    v = QSubspace.from_vectors(3, [[1, 2, 3], [0, 1, 1]])
    single = lattice_closure([v])
    assert not single.truncated
    assert len(single.subspaces) == 3
    assert v in single.subspaces


def test_lattice_closure_cap_forcing():
    seeds = [QSubspace.span([1, 0, 0]), QSubspace.span([0, 1, 0])]
    result = lattice_closure(seeds, cap=2)
    assert result.truncated
    assert len(result.subspaces) == 2


def test_closure_closed_under_operations_when_not_truncated():
    rng = random.Random(7)
    for _ in range(10):
        d = rng.randint(2, 4)
        seeds = [rand_subspace(rng, d) for _ in range(rng.randint(1, 3))]
        result = lattice_closure(seeds)
        if result.truncated:
            continue
        members = set(result.subspaces)
        for a in result.subspaces:
            for b in result.subspaces:
                assert subspace_sum(a, b) in members
                assert subspace_intersect(a, b) in members


def test_rank_transpose_and_kernel_dimension():
    rng = random.Random(11)
    for _ in range(50):
        m = rand_matrix(rng, rng.randint(1, 5), rng.randint(1, 5))
        r = rank(m)
        assert r == rank(m.transpose())
        assert kernel_basis(m).dim + r == m.cols


def test_dimension_formula_on_random_pairs():
    # dim A + dim B = dim(A+B) + dim(A intersect B), 200 seeded pairs.
    rng = random.Random(13)
    for _ in range(200):
        d = rng.randint(2, 6)
        a = rand_subspace(rng, d)
        b = rand_subspace(rng, d)
        lhs = a.dim + b.dim
        rhs = subspace_sum(a, b).dim + subspace_intersect(a, b).dim
        assert lhs == rhs


def test_canonicalization_is_basis_independent():
    rng = random.Random(17)
    for _ in range(50):
        d = rng.randint(2, 5)
        a = rand_subspace(rng, d)
        if a.dim == 0:
            continue
        rows = [list(r) for r in a.basis.entries]
        # Mix the basis with random invertible row operations.
        shuffled = list(rows)
        rng.shuffle(shuffled)
        mixed = []
        for i, row in enumerate(shuffled):
            other = shuffled[(i + 1) % len(shuffled)]
            coeff = Fraction(rng.randint(1, 3))
            mixed.append([x + coeff * y for x, y in zip(row, other)] if len(shuffled) > 1 else row)
        b = QSubspace.from_vectors(d, mixed)
        if b.dim == a.dim:
            assert a == b


def test_subspace_membership():
    v = QSubspace.from_vectors(3, [[1, 0, 1], [0, 1, 1]])
    assert v.contains([1, 1, 2])
    assert not v.contains([0, 0, 1])
    assert QSubspace.zero(3).contains([0, 0, 0])


def test_matrix_text_round_trip():
    m = QMatrix.from_rows([[Fraction(1, 2), Fraction(-3)], [Fraction(0), Fraction(7, 3)]])
    text = matrix_to_text(m)
    assert text.splitlines()[0] == "1/2 -3/1"
    assert matrix_from_text(text) == m
