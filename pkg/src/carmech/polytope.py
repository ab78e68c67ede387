"""Vertices of the CAR polytope and decompositions into them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import nnls

from .core import (
    CarMechanism,
    Cover,
    MechanismError,
    MixtureDecomposition,
    MixtureTerm,
    SampleSpace,
    Subset,
    mixture,
    partition_mechanism,
    set_partitions,
)
from .linsolve import (
    Indeterminate,
    Infeasible,
    Unique,
    incidence,
    positive_unique_solution,
    solve,
    solve_ones,
)

ENUMERATION_CAP = 5


class EnumerationCapError(MechanismError):
    pass


class InconsistentMechanismError(MechanismError):
    pass


class RationalizeError(MechanismError):
    pass


def _check_cap(space: SampleSpace) -> None:
    if space.n > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"exhaustive search supports at most {ENUMERATION_CAP} elements, got {space.n}"
        )


def extreme_on(cover: Cover) -> Optional[CarMechanism]:
    """The extreme mechanism supported exactly on ``cover``, if there is one."""
    outcome = solve_ones(incidence(cover))
    if isinstance(outcome, Unique) and all(z > 0 for z in outcome.z):
        return CarMechanism(cover.space, dict(zip(cover.sets, outcome.z)))
    return None


def is_extreme(mech: CarMechanism) -> bool:
    cover = mech.support
    outcome = solve_ones(incidence(cover))
    if not isinstance(outcome, Unique):
        return False
    own = tuple(mech.probs[a] for a in cover)
    if outcome.z != own:
        # A valid mechanism is itself a solution on its support.
        raise InconsistentMechanismError(
            f"unique solution {outcome.z} disagrees with the mechanism's probabilities {own}"
        )
    return True


def cover_masks(n: int, max_sets: Optional[int] = None) -> Iterator[tuple[int, ...]]:
    """Ascending mask tuples of every cover of ``{1..n}`` with at most ``max_sets`` sets."""
    full = (1 << n) - 1
    masks = range(1, full + 1)
    top = max_sets if max_sets is not None else full
    for m in range(1, top + 1):
        for combo in itertools.combinations(masks, m):
            union = 0
            for mask in combo:
                union |= mask
            if union == full:
                yield combo


def covers(space: SampleSpace, max_sets: Optional[int] = None) -> Iterator[Cover]:
    """Every cover of the space with at most ``max_sets`` sets."""
    for combo in cover_masks(space.n, max_sets):
        yield Cover(space, tuple(Subset(mask, space.n) for mask in combo))


def _extreme_solution(masks: Sequence[int], n: int) -> Optional[tuple[Fraction, ...]]:
    rows = [[mask >> i & 1 for mask in masks] for i in range(n)]
    return positive_unique_solution(rows)


@dataclass(frozen=True)
class ExtremeCatalog:
    space: SampleSpace
    mechanisms: tuple[CarMechanism, ...]

    def __post_init__(self):
        supports = {m.support for m in self.mechanisms}
        if len(supports) != len(self.mechanisms):
            raise MechanismError("catalog contains two extremes with the same support")

    def __len__(self):
        return len(self.mechanisms)

    def __iter__(self):
        return iter(self.mechanisms)

    def within(self, support: Sequence[Subset]) -> list[CarMechanism]:
        """Extremes whose support lies inside ``support``."""
        allowed = set(support)
        return [m for m in self.mechanisms if allowed.issuperset(m.probs)]


@lru_cache(maxsize=None)
def _catalog(n: int) -> ExtremeCatalog:
    space = SampleSpace(n)
    found = []
    for combo in cover_masks(n, n):
        z = _extreme_solution(combo, n)
        if z is not None:
            found.append(CarMechanism(space, {Subset(mask, n): p for mask, p in zip(combo, z)}))
    found.sort(key=CarMechanism.sort_key)
    return ExtremeCatalog(space, tuple(found))


def enumerate_extremes(space: SampleSpace) -> ExtremeCatalog:
    """All extreme CAR mechanisms, by testing every cover with at most n sets."""
    _check_cap(space)
    return _catalog(space.n)


def _null_direction(cols: Sequence[Subset], n: int) -> Optional[list[Fraction]]:
    """A nonzero ``d`` with ``M d = 0`` over the given columns, or None if independent.

    ``d`` is +1 on the first dependent column and expresses that column
    through the pivot columns preceding it.
    """
    rows = [[int(x in a) for a in cols] for x in range(1, n + 1)]
    for c in range(1, len(cols)):
        head = [row[:c] for row in rows]
        target = [row[c] for row in rows]
        outcome = solve(head, target)
        if isinstance(outcome, Infeasible):
            continue
        w = outcome.z if isinstance(outcome, Unique) else outcome.particular
        d = [-wj for wj in w] + [Fraction(1)] + [Fraction(0)] * (len(cols) - c - 1)
        return d
    return None


def vertex_below(point: Mapping[Subset, Fraction], space: SampleSpace) -> CarMechanism:
    """Walk from a CAR point to a vertex of the smallest face containing it.

    Each step moves along a null direction of the active columns until a
    coordinate reaches zero, so the support shrinks until the columns are
    independent.
    """
    cur = {a: Fraction(p) for a, p in sorted(point.items()) if p}
    while True:
        cols = list(cur)
        d = _null_direction(cols, space.n)
        if d is None:
            return CarMechanism(space, cur)
        t = min(cur[a] / -dj for a, dj in zip(cols, d) if dj < 0)
        cur = {a: cur[a] + t * dj for a, dj in zip(cols, d)}
        cur = {a: p for a, p in cur.items() if p}


def decompose(mech: CarMechanism) -> MixtureDecomposition:
    """Write a CAR mechanism as a convex combination of extreme ones.

    Repeatedly peel off a vertex of the face spanned by the current support,
    taking the largest weight that keeps the residual nonnegative.
    """
    space = mech.space
    cur = dict(mech.probs)
    remaining = Fraction(1)
    terms: list[MixtureTerm] = []
    while True:
        v = vertex_below(cur, space)
        if dict(v.probs) == cur:
            terms.append(MixtureTerm(remaining, v, True))
            break
        t = min(cur[a] / p for a, p in v.probs.items())
        terms.append(MixtureTerm(remaining * t, v, True))
        cur = {a: (p - t * v[a]) / (1 - t) for a, p in cur.items()}
        cur = {a: p for a, p in cur.items() if p}
        remaining *= 1 - t
    return MixtureDecomposition(tuple(terms))


def _exact_feasible(columns: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> Optional[list[Fraction]]:
    """Find ``x >= 0`` with ``sum_j x_j columns[j] = b`` (``b >= 0``) or return None.

    Phase-one simplex over fractions with Bland's rule, so it terminates and
    is exact.
    """
    rows = len(b)
    k = len(columns)
    width = k + rows
    tab = [[Fraction(columns[j][i]) for j in range(k)]
           + [Fraction(int(i == r)) for r in range(rows)]
           + [Fraction(b[i])] for i in range(rows)]
    basis = [k + i for i in range(rows)]
    cost = [0] * k + [1] * rows
    while True:
        entering = None
        for j in range(width):
            if j in basis:
                continue
            reduced = cost[j] - sum(cost[basis[i]] * tab[i][j] for i in range(rows))
            if reduced < 0:
                entering = j
                break
        if entering is None:
            break
        leave = None
        best = None
        for i in range(rows):
            a = tab[i][entering]
            if a > 0:
                ratio = tab[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            # Phase-one objective is bounded below by zero.
            raise AssertionError("unbounded phase-one simplex")
        piv = tab[leave][entering]
        tab[leave] = [v / piv for v in tab[leave]]
        for i in range(rows):
            if i != leave and tab[i][entering]:
                f = tab[i][entering]
                tab[i] = [v - f * w for v, w in zip(tab[i], tab[leave])]
        basis[leave] = entering
    if any(basis[i] >= k and tab[i][-1] for i in range(rows)):
        return None
    x = [Fraction(0)] * k
    for i, j in enumerate(basis):
        if j < k:
            x[j] = tab[i][-1]
    return x


@dataclass(frozen=True)
class CcarCheck:
    ok: bool
    decomposition: Optional[MixtureDecomposition] = None

    def __bool__(self):
        return self.ok


def is_ccar(mech: CarMechanism) -> CcarCheck:
    """Decide whether ``mech`` is a convex combination of partition mechanisms."""
    space = mech.space
    _check_cap(space)
    support = list(mech.probs)
    allowed = set(support)
    parts = [p for p in set_partitions(space) if allowed.issuperset(p.sets)]
    if not parts:
        return CcarCheck(False)
    columns = [[Fraction(int(a in p.sets)) for a in support] for p in parts]
    x = _exact_feasible(columns, [mech.probs[a] for a in support])
    if x is None:
        return CcarCheck(False)
    terms = tuple(
        MixtureTerm(w, partition_mechanism(p), True) for w, p in zip(x, parts) if w > 0
    )
    return CcarCheck(True, MixtureDecomposition(terms))


def _distance(approx: Mapping[Subset, Fraction], mech: CarMechanism) -> Fraction:
    keys = set(approx) | set(mech.probs)
    return max((abs(approx.get(a, Fraction(0)) - mech[a]) for a in keys), default=Fraction(0))


def rationalize(approx: Mapping[Subset, Union[float, Fraction]], epsilon) -> CarMechanism:
    """An exact CAR mechanism within ``epsilon`` (max-norm) of a numerical one.

    The point is fitted as a nonnegative combination of the extremes living
    on its support; weights are then replaced by continued-fraction
    convergents and the largest weight absorbs the rounding residue.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise RationalizeError("epsilon must be positive")
    if not approx:
        raise RationalizeError("empty mechanism")
    n = next(iter(approx)).n
    space = SampleSpace(n)
    exact = {a: Fraction(v) for a, v in approx.items()}
    for a, v in exact.items():
        if a.n != n:
            raise RationalizeError("sets from different sample spaces")
        if v < -epsilon / 2 or v > 1 + epsilon / 2:
            raise RationalizeError(f"probability {float(v)} of {a} is outside [0,1]")
    for x in space.elements:
        total = sum((v for a, v in exact.items() if x in a), Fraction(0))
        if abs(total - 1) > epsilon / 2:
            raise RationalizeError(
                f"sets containing element {x} sum to {float(total)}, more than epsilon/2 from 1"
            )
    try:
        return CarMechanism(space, exact)
    except MechanismError:
        pass
    _check_cap(space)
    support = sorted(a for a, v in exact.items() if v > 0)
    extremes = enumerate_extremes(space).within(support)
    if not extremes:
        raise RationalizeError("no CAR mechanism lives on the support of the input")
    design = np.array([[float(v[a]) for v in extremes] for a in support] + [[1.0] * len(extremes)])
    target = np.array([float(exact[a]) for a in support] + [1.0])
    weights, _ = nnls(design, target)
    picked = [(w, v) for w, v in zip(weights, extremes) if w > 0]
    if not picked:
        raise RationalizeError("could not fit the input with extreme mechanisms")
    bound = math.ceil(4 * len(picked) / epsilon)
    rounded = [(Fraction(float(w)).limit_denominator(bound), v) for w, v in picked]
    rounded = [(w, v) for w, v in rounded if w > 0]
    rounded.sort(key=lambda wv: wv[0], reverse=True)
    head = 1 - sum(w for w, _ in rounded[1:])
    if head <= 0:
        raise RationalizeError("rounded weights do not leave room for normalization")
    result = mixture([(head, rounded[0][1])] + rounded[1:])
    gap = _distance(exact, result)
    if gap >= epsilon:
        raise RationalizeError(
            f"input is {float(gap):.3g} from the nearest rational mixture found, not within epsilon"
        )
    return result


@dataclass(frozen=True)
class ExtremeOk:
    z: tuple[Fraction, ...]


@dataclass(frozen=True)
class RankDeficient:
    rank: int


@dataclass(frozen=True)
class NonPositive:
    z: tuple[Fraction, ...]
    column: int  # 1-based position of the first nonpositive coordinate


@dataclass(frozen=True)
class FarkasInfeasible:
    certificate: tuple[int, ...]


@dataclass(frozen=True)
class Inconclusive:
    bound: int


FarkasReport = Union[ExtremeOk, RankDeficient, NonPositive, FarkasInfeasible, Inconclusive]

_BOX_SEARCH_LIMIT = 200_000


def is_certificate(cover: Cover, y: Sequence[int]) -> bool:
    """``y^T M >= 0`` and ``y^T 1 < 0``: no nonnegative ``z`` solves ``M z = 1``."""
    M = incidence(cover)
    if sum(y) >= 0:
        return False
    return all(sum(yi * row[j] for yi, row in zip(y, M.rows)) >= 0 for j in range(M.m))


def farkas_report(cover: Cover) -> FarkasReport:
    M = incidence(cover)
    n, m = M.n, M.m
    outcome = solve_ones(M)
    if isinstance(outcome, Unique):
        for j, zj in enumerate(outcome.z, start=1):
            if zj <= 0:
                return NonPositive(outcome.z, j)
        return ExtremeOk(outcome.z)
    if isinstance(outcome, Indeterminate) or outcome.rank < m:
        return RankDeficient(outcome.rank)
    bound = m * n
    # y^T M = 0 and y^T 1 = -1 is solvable because 1 is outside the column space.
    transposed = [list(M.column(j)) for j in range(m)] + [[1] * n]
    found = solve(transposed, [0] * m + [-1])
    if not isinstance(found, Infeasible):
        y = found.z if isinstance(found, Unique) else found.particular
        scale = math.lcm(*(v.denominator for v in y))
        ints = [int(v * scale) for v in y]
        g = math.gcd(*ints)
        ints = [v // g for v in ints]
        if max(map(abs, ints)) <= bound and is_certificate(cover, ints):
            return FarkasInfeasible(tuple(ints))
    if (2 * bound + 1) ** n <= _BOX_SEARCH_LIMIT:
        for y in itertools.product(range(-bound, bound + 1), repeat=n):
            if is_certificate(cover, y):
                return FarkasInfeasible(tuple(y))
    return Inconclusive(bound)
