"""Exact CAR check for general coarsening mechanisms."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import CarMechanism, CoarseningMechanism, MechanismError, Subset


@dataclass(frozen=True)
class Witness:
    """Set ``subset`` is observed with different probabilities from ``x`` and ``x_other``."""

    subset: Subset
    x: int
    x_other: int
    p: Fraction
    p_other: Fraction

    def __str__(self):
        return (
            f"P({self.subset} | {self.x}) = {self.p} but "
            f"P({self.subset} | {self.x_other}) = {self.p_other}"
        )


@dataclass(frozen=True)
class CarCheck:
    ok: bool
    witness: Optional[Witness] = None

    def __bool__(self):
        return self.ok


class NotCarError(MechanismError):
    def __init__(self, witness: Witness):
        self.witness = witness
        super().__init__(f"mechanism is not CAR: {witness}")


def is_car(mech: CoarseningMechanism) -> CarCheck:
    """Check that every observed set has one probability shared by all its members.

    On failure the witness is the lexicographically least violating
    ``(A, x, x')`` with sets ordered by mask and ``x < x'``.
    """
    for subset in mech.support():
        values = [(x, mech.value(x, subset)) for x in subset]
        for i, (x, p) in enumerate(values):
            for x2, p2 in values[i + 1:]:
                if p != p2:
                    return CarCheck(False, Witness(subset, x, x2, p, p2))
    return CarCheck(True)


def to_car(mech: CoarseningMechanism) -> CarMechanism:
    check = is_car(mech)
    if not check:
        raise NotCarError(check.witness)
    probs = {}
    for subset in mech.support():
        probs[subset] = mech.value(subset.elements[0], subset)
    return CarMechanism(mech.space, probs)


def expand(mech: CarMechanism) -> CoarseningMechanism:
    """Conditional table with ``pi[x, A] = pi_A`` for every member ``x`` of ``A``."""
    table = {(x, a): p for a, p in mech.probs.items() for x in a}
    return CoarseningMechanism(mech.space, table)
