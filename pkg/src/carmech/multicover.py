"""Uniform multicovers and their correspondence with rational CAR mechanisms."""

from __future__ import annotations

import math
from fractions import Fraction
from types import MappingProxyType
from typing import Iterator, Mapping, Optional

from .core import CarMechanism, MechanismError, SampleSpace, Subset
from .polytope import is_extreme

SEARCH_CAP = 24


class MulticoverError(MechanismError):
    pass


class UniformMulticover:
    """A multiset of subsets in which every element lies in exactly ``height`` sets.

    Multiplicities sharing a common factor with the height are divided by it,
    so equal instances always compare equal.
    """

    __slots__ = ("space", "multiplicities", "height")

    def __init__(self, space: SampleSpace, multiplicities: Mapping[Subset, int], height: Optional[int] = None):
        counts = {}
        for subset, mult in multiplicities.items():
            if subset.n != space.n:
                raise MulticoverError(f"set {subset} is not a subset of a {space.n}-element space")
            if int(mult) != mult or mult < 0:
                raise MulticoverError(f"multiplicity of {subset} must be a nonnegative integer, got {mult}")
            if mult:
                counts[subset] = int(mult)
        per_element = {x: sum(c for a, c in counts.items() if x in a) for x in space.elements}
        k = per_element[1] if height is None else height
        for x, total in per_element.items():
            if total != k:
                raise MulticoverError(f"element {x} lies in {total} sets, expected {k}")
        if k <= 0:
            raise MulticoverError("height must be positive")
        g = math.gcd(k, *counts.values())
        ordered = {a: c // g for a, c in sorted(counts.items())}
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "multiplicities", MappingProxyType(ordered))
        object.__setattr__(self, "height", k // g)

    def __setattr__(self, name, value):
        raise AttributeError("UniformMulticover is immutable")

    @property
    def total(self) -> int:
        """Number of sets counted with multiplicity."""
        return sum(self.multiplicities.values())

    def __eq__(self, other):
        if not isinstance(other, UniformMulticover):
            return NotImplemented
        return (self.space, self.height, tuple(self.multiplicities.items())) == (
            other.space, other.height, tuple(other.multiplicities.items()))

    def __hash__(self):
        return hash((self.space, self.height, tuple(self.multiplicities.items())))

    def __repr__(self):
        body = ", ".join(f"{a}: {c}" for a, c in self.multiplicities.items())
        return f"UniformMulticover(n={self.space.n}, k={self.height}, {{{body}}})"


def from_multicover(mc: UniformMulticover) -> CarMechanism:
    k = mc.height
    return CarMechanism(mc.space, {a: Fraction(c, k) for a, c in mc.multiplicities.items()})


def to_multicover(mech: CarMechanism) -> UniformMulticover:
    k = math.lcm(*(p.denominator for p in mech.probs.values()))
    counts = {a: int(p * k) for a, p in mech.probs.items()}
    return UniformMulticover(mech.space, counts, k)


def height(mech: CarMechanism) -> int:
    """Height of the canonical multicover generating ``mech``."""
    return math.lcm(*(p.denominator for p in mech.probs.values()))


def is_extreme_multicover(mc: UniformMulticover) -> bool:
    return is_extreme(from_multicover(mc))


def _uniform_submultisets(
    items: list[tuple[int, int]], n: int, k: int, budget: Optional[int] = None
) -> Iterator[list[int]]:
    """Multiplicity vectors ``0 <= m_i <= cap_i`` giving every element count ``k``.

    ``items`` holds ``(mask, cap)`` pairs.  Once the last set containing an
    element has been decided, that element's count must already be ``k``.
    ``budget`` bounds the sum of the vector.
    """
    if budget is None:
        budget = sum(cap for _, cap in items)
    last = [-1] * n
    for i, (mask, _) in enumerate(items):
        for x in range(n):
            if mask >> x & 1:
                last[x] = i
    closes = [[x for x in range(n) if last[x] == i] for i in range(len(items))]
    counts = [0] * n
    chosen = [0] * len(items)

    def rec(i: int, left: int) -> Iterator[list[int]]:
        if i == len(items):
            yield list(chosen)
            return
        mask, cap = items[i]
        members = [x for x in range(n) if mask >> x & 1]
        room = min(k - counts[x] for x in members)
        for c in range(min(cap, room, left) + 1):
            for x in members:
                counts[x] += c
            if all(counts[x] == k for x in closes[i]) and k - min(counts) <= left - c:
                chosen[i] = c
                yield from rec(i + 1, left - c)
            for x in members:
                counts[x] -= c
        chosen[i] = 0

    yield from rec(0, budget)


def sub_multicover_search(mc: UniformMulticover, cap: int = SEARCH_CAP) -> Optional[UniformMulticover]:
    """A proper sub-multiset of ``mc`` that is itself a uniform multicover.

    Tries heights ``1..k-1`` in order; a sub-multiset of the same height would
    leave a complement covering nothing, so it cannot be proper.
    """
    if mc.total > cap:
        raise MulticoverError(f"total multiplicity {mc.total} exceeds the search cap {cap}")
    items = [(a.mask, c) for a, c in mc.multiplicities.items()]
    for k in range(1, mc.height):
        for vec in _uniform_submultisets(items, mc.space.n, k):
            counts = {a: c for a, c in zip(mc.multiplicities, vec) if c}
            return UniformMulticover(mc.space, counts, k)
    return None


def enumerate_multicovers(space: SampleSpace, max_total: int) -> Iterator[UniformMulticover]:
    """Every canonical uniform multicover with total multiplicity at most ``max_total``."""
    n = space.n
    items = [(mask, max_total) for mask in range(1, space.full_mask + 1)]
    # A k-cover has total multiplicity at least k.
    for k in range(1, max_total + 1):
        for vec in _uniform_submultisets(items, n, k, max_total):
            counts = {Subset(mask, n): c for (mask, _), c in zip(items, vec) if c}
            if math.gcd(k, *counts.values()) == 1:
                yield UniformMulticover(space, counts, k)
