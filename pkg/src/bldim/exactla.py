"""Exact rational linear algebra over Q^d.

Ranks, kernels, canonical subspaces, subspace sums/intersections, image
dimensions, and lattice closures.  Everything here is exact: entries are
`fractions.Fraction` values and no floating point appears anywhere in
this module.  A subspace is stored in a canonical form (reduced row
echelon basis), so equality of subspaces is plain equality of the stored
data.

All values are immutable after construction and all operations are pure
functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence, Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ints, `p/q` strings, and Fractions to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise TypeError(f"not an exact rational: {value!r} (floats are not accepted here)")


@dataclass(frozen=True)
class QMatrix:
    """Dense matrix of exact rationals.

    `entries` is a tuple of row tuples.  A 0-row matrix is allowed so the
    zero subspace can carry an (empty) basis matrix.
    """

    rows: int
    cols: int
    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 1:
            raise ValueError(f"bad shape {self.rows}x{self.cols}")
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entries do not match the declared shape")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[RationalLike]], cols: int | None = None) -> "QMatrix":
        ent = tuple(tuple(as_rational(x) for x in row) for row in rows)
        if not ent:
            if cols is None:
                raise ValueError("cols required for a 0-row matrix")
            return cls(0, cols, ())
        return cls(len(ent), len(ent[0]), ent)

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        one, zero = Fraction(1), Fraction(0)
        return cls(n, n, tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)))

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.entries[i]

    def transpose(self) -> "QMatrix":
        return QMatrix(self.cols, self.rows,
                       tuple(tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)))

    def apply(self, vector: Sequence[RationalLike]) -> tuple[Fraction, ...]:
        """Matrix-vector product M @ v."""
        if len(vector) != self.cols:
            raise ValueError(f"vector length {len(vector)} != cols {self.cols}")
        v = [as_rational(x) for x in vector]
        return tuple(sum((r[j] * v[j] for j in range(self.cols)), Fraction(0)) for r in self.entries)


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """In-place reduced row echelon form; returns (rows, pivot columns)."""
    if not rows:
        return rows, []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        inv = Fraction(1) / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(m: QMatrix) -> int:
    """Exact rank over the rationals."""
    _, pivots = _rref([list(r) for r in m.entries])
    return len(pivots)


@dataclass(frozen=True)
class QSubspace:
    """Linear subspace of Q^d in canonical form.

    `basis` rows are a reduced-row-echelon basis, so two values describe
    the same subspace iff they compare equal.  A 0-row basis encodes {0}.
    """

    ambient_dim: int
    basis: QMatrix

    def __post_init__(self):
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be >= 1")
        if self.basis.rows and self.basis.cols != self.ambient_dim:
            raise ValueError("basis width does not match ambient_dim")

    @classmethod
    def from_vectors(cls, ambient_dim: int, vectors: Iterable[Sequence[RationalLike]]) -> "QSubspace":
        rows = [[as_rational(x) for x in v] for v in vectors]
        for v in rows:
            if len(v) != ambient_dim:
                raise ValueError("vector length does not match ambient_dim")
        reduced, pivots = _rref(rows)
        kept = tuple(tuple(reduced[i]) for i in range(len(pivots)))
        return cls(ambient_dim, QMatrix(len(kept), ambient_dim, kept))

    @classmethod
    def zero(cls, ambient_dim: int) -> "QSubspace":
        return cls(ambient_dim, QMatrix(0, ambient_dim, ()))

    @classmethod
    def full(cls, ambient_dim: int) -> "QSubspace":
        return cls(ambient_dim, QMatrix.identity(ambient_dim))

    @classmethod
    def span(cls, *vectors: Sequence[RationalLike]) -> "QSubspace":
        if not vectors:
            raise ValueError("span() needs at least one vector; use zero() for {0}")
        return cls.from_vectors(len(vectors[0]), vectors)

    @property
    def dim(self) -> int:
        return self.basis.rows

    def contains(self, vector: Sequence[RationalLike]) -> bool:
        v = [as_rational(x) for x in vector]
        if len(v) != self.ambient_dim:
            raise ValueError("vector length does not match ambient_dim")
        # Reduce v against the RREF basis; membership iff residue is zero.
        for row in self.basis.entries:
            pivot = next(j for j, x in enumerate(row) if x != 0)
            if v[pivot] != 0:
                f = v[pivot]
                v = [a - f * b for a, b in zip(v, row)]
        return all(x == 0 for x in v)

    def sort_key(self):
        return (self.dim, tuple(x for row in self.basis.entries for x in row))


def kernel_basis(m: QMatrix) -> QSubspace:
    """ker(M) as a canonical subspace of Q^cols; dim = cols - rank(M)."""
    reduced, pivots = _rref([list(r) for r in m.entries])
    pivot_set = set(pivots)
    free = [c for c in range(m.cols) if c not in pivot_set]
    vectors = []
    for f in free:
        v = [Fraction(0)] * m.cols
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -reduced[r][f]
        vectors.append(v)
    return QSubspace.from_vectors(m.cols, vectors)


def subspace_sum(a: QSubspace, b: QSubspace) -> QSubspace:
    """Canonical basis of A + B."""
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(f"ambient dimension mismatch: {a.ambient_dim} != {b.ambient_dim}")
    return QSubspace.from_vectors(a.ambient_dim, list(a.basis.entries) + list(b.basis.entries))


def subspace_intersect(a: QSubspace, b: QSubspace) -> QSubspace:
    """Canonical basis of A ∩ B (Zassenhaus block reduction)."""
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(f"ambient dimension mismatch: {a.ambient_dim} != {b.ambient_dim}")
    d = a.ambient_dim
    zero = [Fraction(0)] * d
    block = [list(r) + list(r) for r in a.basis.entries]
    block += [list(r) + zero for r in b.basis.entries]
    reduced, pivots = _rref(block)
    vectors = [row[d:] for row in reduced[: len(pivots)] if all(x == 0 for x in row[:d])]
    return QSubspace.from_vectors(d, vectors)


def image_dim(p: QMatrix, v: QSubspace) -> int:
    """dim P(V): rank of P applied to V's basis vectors."""
    if p.cols != v.ambient_dim:
        raise ValueError(f"matrix cols {p.cols} != ambient_dim {v.ambient_dim}")
    if v.dim == 0:
        return 0
    images = [p.apply(row) for row in v.basis.entries]
    return rank(QMatrix.from_rows(images, cols=p.rows))


class ClosureResult(NamedTuple):
    subspaces: list[QSubspace]
    truncated: bool


DEFAULT_CLOSURE_CAP = 512


def lattice_closure(seeds: Sequence[QSubspace], cap: int = DEFAULT_CLOSURE_CAP) -> ClosureResult:
    """Closure of seeds ∪ {{0}, full} under subspace sum and intersection.

    Deduplicates by canonical form and stops at `cap` elements; hitting the
    cap sets the truncated flag instead of raising.  Output is sorted by
    (dimension, basis entries) so results are deterministic.
    """
    if not seeds:
        raise ValueError("lattice_closure needs at least one seed")
    d = seeds[0].ambient_dim
    if any(s.ambient_dim != d for s in seeds):
        raise ValueError("seeds do not share an ambient dimension")
    found: set[QSubspace] = {QSubspace.zero(d), QSubspace.full(d), *seeds}
    truncated = len(found) > cap
    frontier = list(found) if not truncated else []
    while frontier and not truncated:
        fresh: list[QSubspace] = []
        members = list(found)
        for x in frontier:
            for y in members:
                for combined in (subspace_sum(x, y), subspace_intersect(x, y)):
                    if combined in found:
                        continue
                    if len(found) >= cap:
                        truncated = True
                        break
                    found.add(combined)
                    fresh.append(combined)
                if truncated:
                    break
            if truncated:
                break
        frontier = fresh
    out = sorted(found, key=QSubspace.sort_key)[:cap]
    return ClosureResult(out, truncated)


def matrix_to_text(m: QMatrix) -> str:
    """One row per line, entries serialized `p/q`, single spaces."""
    return "\n".join(" ".join(f"{x.numerator}/{x.denominator}" for x in row) for row in m.entries)


def matrix_from_text(text: str) -> QMatrix:
    """Parse the `p/q`-per-entry row format (bare integers also accepted)."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        rows.append([Fraction(tok) for tok in line.split()])
    if not rows:
        raise ValueError("empty matrix text")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged matrix text")
    return QMatrix.from_rows(rows)
