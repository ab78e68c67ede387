"""Nested 0/1 matrices whose CAR solutions have Fibonacci denominators.

``S_1 = (1)``.  From odd ``n``, ``S_{n+1}`` borders ``S_n`` with a leading
1 and zeros; from even ``n`` it borders with a leading 0 and ones.  For odd
``n`` the system ``S_n z = 1`` has the unique solution
``z = (F_{n-1}, ..., F_1, 1) / F_n``, an extreme mechanism of height ``F_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import CarMechanism, MechanismError, SampleSpace, Subset
from .linsolve import IncidenceMatrix, Unique, solve_ones

MAX_N = 30


class FibonacciError(MechanismError):
    pass


def fib(j: int) -> int:
    """Fibonacci numbers with ``F_0 = 0`` and ``F_1 = F_2 = 1``."""
    a, b = 0, 1
    for _ in range(j):
        a, b = b, a + b
    return a


@dataclass(frozen=True)
class FibMatrix:
    n: int
    matrix: IncidenceMatrix

    @property
    def rows(self):
        return self.matrix.rows

    def __str__(self):
        return "\n".join(" ".join(map(str, row)) for row in self.rows)


def _check_n(n: int) -> None:
    if not isinstance(n, int) or not 1 <= n <= MAX_N:
        raise FibonacciError(f"n must be an integer in 1..{MAX_N}, got {n!r}")


def fib_matrix(n: int) -> FibMatrix:
    _check_n(n)
    rows = [[1]]
    for size in range(1, n):
        corner, fill = (1, 0) if size % 2 else (0, 1)
        rows = [[corner] + [fill] * size] + [[fill] + row for row in rows]
    return FibMatrix(n, IncidenceMatrix.from_rows(rows))


def closed_form(n: int) -> tuple[tuple[int, int], ...]:
    """Unreduced ``(numerator, denominator)`` pairs of the predicted solution."""
    fn = fib(n)
    return tuple((fib(j), fn) for j in range(n - 1, 0, -1)) + ((1, fn),)


@dataclass(frozen=True)
class FibSolution:
    z: tuple[Fraction, ...]
    height: int


def fib_solution(n: int) -> FibSolution:
    """Solve ``S_n z = 1`` exactly and check it against the Fibonacci ratios."""
    _check_n(n)
    if n % 2 == 0:
        raise FibonacciError("the Fibonacci solution is claimed for odd n only")
    outcome = solve_ones(fib_matrix(n).matrix)
    if not isinstance(outcome, Unique):
        raise FibonacciError(f"S_{n} z = 1 has no unique solution: {outcome}")
    for j, (zj, (num, den)) in enumerate(zip(outcome.z, closed_form(n)), start=1):
        if zj.numerator * den != num * zj.denominator:
            raise FibonacciError(f"z_{j} = {zj} but the closed form gives {num}/{den}")
    if any(zj <= 0 for zj in outcome.z):
        raise FibonacciError("solution is not strictly positive")
    k = math.lcm(*(zj.denominator for zj in outcome.z))
    if k != fib(n):
        raise FibonacciError(f"height {k} differs from F_{n} = {fib(n)}")
    return FibSolution(outcome.z, k)


def fib_as_mechanism(n: int) -> CarMechanism:
    """Read the columns of ``S_n`` as subsets carrying the solution values."""
    sol = fib_solution(n)
    matrix = fib_matrix(n)
    probs = {}
    for j, zj in enumerate(sol.z):
        members = [x for x in range(1, n + 1) if matrix.rows[x - 1][j]]
        probs[Subset.of(members, n)] = zj
    return CarMechanism(SampleSpace(n), probs)
