"""Value types for coarsening mechanisms over a finite sample space.

Elements of the sample space are labelled ``1..n``.  A subset is stored as a
bitmask in which element ``x`` occupies bit ``x - 1``.  All probabilities are
exact :class:`fractions.Fraction` values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

Rational = Fraction

MAX_ELEMENTS = 20


class MechanismError(ValueError):
    """Raised when a mechanism or cover violates its defining constraints."""


class NormalizationError(MechanismError):
    """Probabilities containing some element do not sum to one."""

    def __init__(self, element: int, total: Fraction):
        self.element = element
        self.total = total
        super().__init__(
            f"probabilities of sets containing element {element} sum to {total}, not 1"
        )


@dataclass(frozen=True, order=True)
class SampleSpace:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or not 1 <= self.n <= MAX_ELEMENTS:
            raise MechanismError(f"sample space size must be in 1..{MAX_ELEMENTS}, got {self.n!r}")

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def elements(self) -> range:
        return range(1, self.n + 1)

    def full(self) -> Subset:
        return Subset(self.full_mask, self.n)

    def subsets(self) -> Iterator[Subset]:
        """All nonempty subsets in ascending bitmask order."""
        for mask in range(1, self.full_mask + 1):
            yield Subset(mask, self.n)


@dataclass(frozen=True, order=True)
class Subset:
    """A nonempty subset of ``{1..n}``; ordering is by bitmask value."""

    mask: int
    n: int

    def __post_init__(self):
        if self.mask <= 0:
            raise MechanismError("subsets must be nonempty")
        if self.mask >> self.n:
            raise MechanismError(f"mask {self.mask:#b} has bits above element {self.n}")

    @classmethod
    def of(cls, elements: Iterable[int], n: int) -> Subset:
        mask = 0
        for x in elements:
            if not 1 <= x <= n:
                raise MechanismError(f"element {x} is outside 1..{n}")
            mask |= 1 << (x - 1)
        return cls(mask, n)

    def __contains__(self, x: int) -> bool:
        return 1 <= x <= self.n and bool(self.mask >> (x - 1) & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    @property
    def elements(self) -> tuple[int, ...]:
        return tuple(x for x in range(1, self.n + 1) if self.mask >> (x - 1) & 1)

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.elements)) + "}"


def _check_space(space: SampleSpace, subset: Subset) -> None:
    if subset.n != space.n:
        raise MechanismError(f"subset {subset} belongs to a space of size {subset.n}, not {space.n}")


class CoarseningMechanism:
    """General conditional table ``pi[x, A]`` = P(observe A | outcome x)."""

    __slots__ = ("space", "table")

    def __init__(self, space: SampleSpace, table: Mapping[tuple[int, Subset], Fraction]):
        clean: dict[tuple[int, Subset], Fraction] = {}
        for (x, subset), p in table.items():
            _check_space(space, subset)
            if x not in subset:
                raise MechanismError(f"entry for element {x} and set {subset}: {x} is not in the set")
            p = Fraction(p)
            if not 0 <= p <= 1:
                raise MechanismError(f"probability {p} for element {x}, set {subset} is outside [0,1]")
            clean[(x, subset)] = p
        totals = {x: Fraction(0) for x in space.elements}
        for (x, _), p in clean.items():
            totals[x] += p
        for x, total in totals.items():
            if total != 1:
                raise NormalizationError(x, total)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "table", MappingProxyType(dict(sorted(clean.items(), key=lambda kv: (kv[0][1], kv[0][0])))))

    def __setattr__(self, name, value):
        raise AttributeError("CoarseningMechanism is immutable")

    def value(self, x: int, subset: Subset) -> Fraction:
        """Effective probability; explicit zeros and absent entries coincide."""
        return self.table.get((x, subset), Fraction(0))

    def support(self) -> tuple[Subset, ...]:
        return tuple(sorted({a for (_, a), p in self.table.items() if p > 0}))

    def __eq__(self, other):
        if not isinstance(other, CoarseningMechanism):
            return NotImplemented
        mine = {k: v for k, v in self.table.items() if v}
        theirs = {k: v for k, v in other.table.items() if v}
        return self.space == other.space and mine == theirs

    def __hash__(self):
        return hash((self.space, frozenset((k, v) for k, v in self.table.items() if v)))

    def __repr__(self):
        return f"CoarseningMechanism(n={self.space.n}, entries={len(self.table)})"


class CarMechanism:
    """A CAR mechanism given by one probability per subset.

    Zero probabilities are dropped on construction, so ``probs.keys()`` is the
    support.  Construction fails unless every element's sets sum to one.
    """

    __slots__ = ("space", "probs", "_key")

    def __init__(self, space: SampleSpace, probs: Mapping[Subset, Fraction]):
        clean: dict[Subset, Fraction] = {}
        for subset, p in probs.items():
            _check_space(space, subset)
            p = Fraction(p)
            if p < 0 or p > 1:
                raise MechanismError(f"probability {p} for set {subset} is outside [0,1]")
            if p:
                clean[subset] = p
        for x in space.elements:
            total = sum((p for a, p in clean.items() if x in a), Fraction(0))
            if total != 1:
                raise NormalizationError(x, total)
        ordered = dict(sorted(clean.items()))
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "probs", MappingProxyType(ordered))
        object.__setattr__(self, "_key", (space, tuple(ordered.items())))

    def __setattr__(self, name, value):
        raise AttributeError("CarMechanism is immutable")

    def __getitem__(self, subset: Subset) -> Fraction:
        return self.probs.get(subset, Fraction(0))

    @property
    def support(self) -> Cover:
        return Cover(self.space, tuple(self.probs))

    def __eq__(self, other):
        if not isinstance(other, CarMechanism):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __lt__(self, other: CarMechanism) -> bool:
        return self.sort_key() < other.sort_key()

    def sort_key(self) -> tuple:
        return (self.space.n, tuple(a.mask for a in self.probs), tuple(self.probs.values()))

    def __repr__(self):
        body = ", ".join(f"{a}: {p}" for a, p in self.probs.items())
        return f"CarMechanism(n={self.space.n}, {{{body}}})"


@dataclass(frozen=True)
class Cover:
    """Distinct nonempty subsets whose union is the whole space, in mask order."""

    space: SampleSpace
    sets: tuple[Subset, ...]

    def __post_init__(self):
        sets = tuple(sorted(self.sets))
        if not sets:
            raise MechanismError("a cover needs at least one set")
        union = 0
        for i, subset in enumerate(sets):
            _check_space(self.space, subset)
            if i and sets[i - 1] == subset:
                raise MechanismError(f"set {subset} appears twice in cover")
            union |= subset.mask
        if union != self.space.full_mask:
            missing = [x for x in self.space.elements if not union >> (x - 1) & 1]
            raise MechanismError(f"sets do not cover elements {missing}")
        object.__setattr__(self, "sets", sets)

    @classmethod
    def of(cls, space: SampleSpace, blocks: Iterable[Iterable[int]]) -> Cover:
        return cls(space, tuple(Subset.of(b, space.n) for b in blocks))

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self) -> Iterator[Subset]:
        return iter(self.sets)

    @property
    def is_partition(self) -> bool:
        return sum(len(a) for a in self.sets) == self.space.n

    def __str__(self) -> str:
        return " ".join(map(str, self.sets))


@dataclass(frozen=True)
class MixtureTerm:
    weight: Fraction
    mechanism: CarMechanism
    extreme: bool = False


@dataclass(frozen=True)
class MixtureDecomposition:
    terms: tuple[MixtureTerm, ...]

    def __post_init__(self):
        if not self.terms:
            raise MechanismError("a decomposition needs at least one term")
        if any(t.weight <= 0 for t in self.terms):
            raise MechanismError("mixture weights must be positive")
        if sum(t.weight for t in self.terms) != 1:
            raise MechanismError("mixture weights must sum to 1")

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def remix(self) -> CarMechanism:
        return mixture([(t.weight, t.mechanism) for t in self.terms])


def mixture(terms: Sequence[tuple[Fraction, CarMechanism]]) -> CarMechanism:
    """Exact convex combination of CAR mechanisms on a common space."""
    if not terms:
        raise MechanismError("empty mixture")
    space = terms[0][1].space
    total = Fraction(0)
    acc: dict[Subset, Fraction] = {}
    for weight, mech in terms:
        weight = Fraction(weight)
        if weight <= 0:
            raise MechanismError(f"mixture weight {weight} is not positive")
        if mech.space != space:
            raise MechanismError("mixture terms live on different sample spaces")
        total += weight
        for subset, p in mech.probs.items():
            acc[subset] = acc.get(subset, Fraction(0)) + weight * p
    if total != 1:
        raise MechanismError(f"mixture weights sum to {total}, not 1")
    return CarMechanism(space, acc)


def partition_mechanism(partition: Cover) -> CarMechanism:
    """The CAR mechanism putting probability one on every block of a partition."""
    if not partition.is_partition:
        raise MechanismError(f"blocks of {partition} overlap")
    return CarMechanism(partition.space, {a: Fraction(1) for a in partition})


def set_partitions(space: SampleSpace) -> list[Cover]:
    """Every set partition of the space, ordered by their block masks."""
    out: list[tuple[int, ...]] = []

    def rec(remaining: int, blocks: list[int]) -> None:
        if not remaining:
            out.append(tuple(sorted(blocks)))
            return
        low = remaining & -remaining
        rest = remaining ^ low
        sub = rest
        while True:
            blocks.append(low | sub)
            rec(rest & ~sub, blocks)
            blocks.pop()
            if not sub:
                break
            sub = (sub - 1) & rest

    rec(space.full_mask, [])
    out.sort()
    return [Cover(space, tuple(Subset(m, space.n) for m in blocks)) for blocks in out]
