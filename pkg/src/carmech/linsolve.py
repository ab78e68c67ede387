"""Exact solution of ``M z = 1`` for 0/1 incidence matrices.

Elimination is fraction-free (Bareiss) over Python integers; fractions appear
only during back-substitution.  Pivoting takes the first nonzero entry of the
current column, scanning rows top to bottom, so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .core import Cover


@dataclass(frozen=True)
class IncidenceMatrix:
    """Rows are elements ``1..n``; columns follow the cover's set order."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.rows or not self.rows[0]:
            raise ValueError("incidence matrix must be nonempty")
        width = len(self.rows[0])
        for row in self.rows:
            if len(row) != width:
                raise ValueError("ragged incidence matrix")
            if any(v not in (0, 1) for v in row):
                raise ValueError("incidence entries must be 0 or 1")
            if not any(row):
                raise ValueError("every row of an incidence matrix needs a 1")
        for j in range(width):
            if not any(row[j] for row in self.rows):
                raise ValueError(f"column {j + 1} of the incidence matrix is all zero")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> IncidenceMatrix:
        return cls(tuple(tuple(int(v) for v in row) for row in rows))

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        return len(self.rows[0])

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(row[j] for row in self.rows)

    def apply(self, z: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(sum((Fraction(v) * zj for v, zj in zip(row, z)), Fraction(0)) for row in self.rows)


@dataclass(frozen=True)
class Unique:
    z: tuple[Fraction, ...]


@dataclass(frozen=True)
class Indeterminate:
    rank: int
    particular: Optional[tuple[Fraction, ...]]


@dataclass(frozen=True)
class Infeasible:
    rank: int


SolveOutcome = Union[Unique, Indeterminate, Infeasible]


def incidence(cover: Cover) -> IncidenceMatrix:
    return IncidenceMatrix(tuple(
        tuple(int(x in a) for a in cover.sets) for x in cover.space.elements
    ))


def bareiss_echelon(matrix: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[int]]:
    """Fraction-free row echelon form.

    Returns the reduced integer matrix and the list of pivot columns.  Every
    division performed is exact.
    """
    a = [list(row) for row in matrix]
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if a[i][c]), None)
        if p is None:
            continue
        if p != r:
            a[r], a[p] = a[p], a[r]
        piv = a[r][c]
        for i in range(r + 1, nrows):
            f = a[i][c]
            row_i = a[i]
            row_r = a[r]
            for j in range(c + 1, ncols):
                q, rem = divmod(piv * row_i[j] - f * row_r[j], prev)
                assert rem == 0, "inexact Bareiss division"
                row_i[j] = q
            row_i[c] = 0
        prev = piv
        pivots.append(c)
        r += 1
    return a, pivots


def rank(matrix: Sequence[Sequence[int]]) -> int:
    return len(bareiss_echelon(matrix)[1])


def _back_substitute(echelon: list[list[int]], pivots: list[int], m: int) -> tuple[Fraction, ...]:
    z = [Fraction(0)] * m
    for r in range(len(pivots) - 1, -1, -1):
        c = pivots[r]
        row = echelon[r]
        s = Fraction(row[m])
        for j in range(c + 1, m):
            if row[j]:
                s -= row[j] * z[j]
        z[c] = s / row[c]
    return tuple(z)


def solve(A: Sequence[Sequence[int]], b: Sequence[int]) -> SolveOutcome:
    """Classify the integer system ``A z = b`` exactly.

    The particular solution of an indeterminate system sets every free
    column to zero.
    """
    m = len(A[0])
    augmented = [list(row) + [bi] for row, bi in zip(A, b)]
    echelon, pivots = bareiss_echelon(augmented)
    if pivots and pivots[-1] == m:
        return Infeasible(len(pivots) - 1)
    z = _back_substitute(echelon, pivots, m)
    if len(pivots) == m:
        return Unique(z)
    return Indeterminate(len(pivots), z)


def solve_ones(M: IncidenceMatrix) -> SolveOutcome:
    return solve(M.rows, [1] * M.n)


def positive_unique_solution(rows: Sequence[Sequence[int]]) -> Optional[tuple[Fraction, ...]]:
    """The solution of ``rows @ z = 1`` if it is unique and strictly positive.

    Integer-only fast path for exhaustive searches: back-substitution keeps a
    shared denominator and fractions are built only on success.
    """
    m = len(rows[0])
    echelon, pivots = bareiss_echelon([list(row) + [1] for row in rows])
    if len(pivots) != m or pivots[-1] != m - 1:
        return None
    nums = [0] * m
    den = 1
    for r in range(m - 1, -1, -1):
        row = echelon[r]
        acc = row[m] * den
        for j in range(r + 1, m):
            if row[j]:
                acc -= row[j] * nums[j]
        piv = row[r]
        for j in range(r + 1, m):
            nums[j] *= piv
        nums[r] = acc
        den *= piv
    if den < 0:
        den = -den
        nums = [-v for v in nums]
    if any(v <= 0 for v in nums):
        return None
    return tuple(Fraction(v, den) for v in nums)
