import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from carmech import is_extreme
from carmech.fibonacci import (
    FibonacciError,
    closed_form,
    fib,
    fib_as_mechanism,
    fib_matrix,
    fib_solution,
)
from carmech.linsolve import Unique, solve_ones
from carmech.multicover import to_multicover
from conftest import HALF, car

# The published 9x9 instance, transcribed row for row.
S9_REFERENCE = [
    [0, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 1, 1, 1, 1, 1, 1],
    [1, 0, 1, 1, 0, 0, 0, 0, 0],
    [1, 0, 1, 0, 0, 1, 1, 1, 1],
    [1, 0, 1, 0, 1, 1, 0, 0, 0],
    [1, 0, 1, 0, 1, 0, 0, 1, 1],
    [1, 0, 1, 0, 1, 0, 1, 1, 0],
    [1, 0, 1, 0, 1, 0, 1, 0, 1],
]


def test_fib_values():
    assert [fib(j) for j in range(12)] == [0, 1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    assert fib(30) == sympy.fibonacci(30)


def test_matrix_examples():
    assert fib_matrix(1).rows == ((1,),)
    assert fib_matrix(2).rows == ((1, 0), (0, 1))
    assert fib_matrix(3).rows == ((0, 1, 1), (1, 1, 0), (1, 0, 1))
    assert [list(r) for r in fib_matrix(9).rows] == S9_REFERENCE


def test_matrix_recursion_embeds_smaller():
    for n in range(1, 15):
        big, small = fib_matrix(n + 1).rows, fib_matrix(n).rows
        assert tuple(row[1:] for row in big[1:]) == small
        expected = 1 if n % 2 else 0
        assert big[0][0] == expected
        assert set(big[0][1:]) == {1 - expected} and {row[0] for row in big[1:]} == {1 - expected}


def test_solution_examples():
    assert fib_solution(1).z == (Fraction(1),) and fib_solution(1).height == 1
    assert fib_solution(3).z == (HALF, HALF, HALF) and fib_solution(3).height == 2
    sol = fib_solution(9)
    assert sol.height == 34
    assert sol.z == tuple(Fraction(n, 34) for n in (21, 13, 8, 5, 3, 2, 1, 1, 1))
    assert sol.z[2] == Fraction(4, 17)


@pytest.mark.parametrize("n", range(1, 26, 2))
def test_closed_form_against_sympy(n):
    z = sympy.Matrix(fib_matrix(n).rows).LUsolve(sympy.ones(n, 1))
    expected = [sympy.Rational(num, den) for num, den in closed_form(n)]
    assert list(z) == expected
    sol = fib_solution(n)
    assert [sympy.Rational(f.numerator, f.denominator) for f in sol.z] == expected
    assert sol.height == fib(n)


@pytest.mark.parametrize("n", range(2, 20, 2))
def test_even_n_rejected(n):
    with pytest.raises(FibonacciError, match="odd"):
        fib_solution(n)


@pytest.mark.parametrize("n", [0, -1, 31, 2.0])
def test_bad_n(n):
    with pytest.raises(FibonacciError):
        fib_matrix(n)


@given(st.integers(1, 28))
def test_fibonacci_identity(n):
    # The recurrence and Cassini's identity, checked against the loop implementation.
    assert fib(n + 1) == fib(n) + fib(n - 1)
    assert fib(n + 1) * fib(n - 1) - fib(n) ** 2 == (-1) ** n


@pytest.mark.parametrize("n", [1, 3, 5, 7, 9])
def test_height_below_factorial(n):
    assert fib(n) <= math.factorial(n)


def test_small_mechanisms(triangle):
    assert fib_as_mechanism(1) == car(1, {(1,): 1})
    assert fib_as_mechanism(3) == triangle
    five = fib_as_mechanism(5)
    assert sorted(five.probs.values(), reverse=True) == [Fraction(k, 5) for k in (3, 2, 1, 1, 1)]


@pytest.mark.parametrize("n", range(1, 20, 2))
def test_mechanism_is_extreme_with_fibonacci_height(n):
    mech = fib_as_mechanism(n)
    assert is_extreme(mech)
    assert to_multicover(mech).height == fib(n)
    if n >= 7:
        assert fib(n) > 2 ** (n / 2)


def test_solve_ones_unique_for_odd():
    for n in range(1, 14, 2):
        assert isinstance(solve_ones(fib_matrix(n).matrix), Unique)


def test_str_rendering():
    assert str(fib_matrix(3)) == "0 1 1\n1 1 0\n1 0 1"
