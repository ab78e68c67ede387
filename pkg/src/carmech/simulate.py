"""Seeded simulation of the randomized multicover coarsening procedure.

A model is a list of uniform multicovers with rational selection weights.
Given an outcome ``x``, one multicover is chosen by its weight, then one of
the ``k`` sets (with multiplicity) containing ``x`` is chosen uniformly.

Randomness comes from numpy's PCG64 generator.  Every random choice is an
integer drawn from ``[0, bound)`` with ``Generator.integers``, which uses
rejection sampling, so uniform choices carry no modulo bias.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

from .core import CarMechanism, MechanismError, MixtureDecomposition, Subset
from .multicover import UniformMulticover, to_multicover

CRITICAL_LEVEL = 0.999
MIN_EXPECTED = 5


class ModelError(MechanismError):
    pass


@dataclass(frozen=True)
class ProceduralModel:
    multicovers: tuple[UniformMulticover, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.multicovers or len(self.multicovers) != len(self.weights):
            raise ModelError("need one positive weight per multicover")
        weights = tuple(Fraction(w) for w in self.weights)
        if any(w <= 0 for w in weights) or sum(weights) != 1:
            raise ModelError("weights must be positive and sum to 1")
        if len({mc.space for mc in self.multicovers}) != 1:
            raise ModelError("multicovers live on different sample spaces")
        object.__setattr__(self, "multicovers", tuple(self.multicovers))
        object.__setattr__(self, "weights", weights)

    @property
    def space(self):
        return self.multicovers[0].space

    @classmethod
    def single(cls, mc: UniformMulticover) -> ProceduralModel:
        return cls((mc,), (Fraction(1),))

    @classmethod
    def from_decomposition(cls, dec: MixtureDecomposition) -> ProceduralModel:
        return cls(tuple(to_multicover(t.mechanism) for t in dec), tuple(t.weight for t in dec))


def model_mechanism(model: ProceduralModel) -> CarMechanism:
    """The CAR mechanism the procedure simulates."""
    probs: dict[Subset, Fraction] = {}
    for w, mc in zip(model.weights, model.multicovers):
        for a, c in mc.multiplicities.items():
            probs[a] = probs.get(a, Fraction(0)) + w * Fraction(c, mc.height)
    return CarMechanism(model.space, probs)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class _Sampler:
    """Cumulative tables for drawing sets containing one element ``x``."""

    def __init__(self, model: ProceduralModel, x: int):
        if x not in model.space.elements:
            raise ModelError(f"element {x} is not in the sample space")
        self.scale = math.lcm(*(w.denominator for w in model.weights))
        if max(self.scale, *(mc.height for mc in model.multicovers)) >= 2**63:
            raise ModelError("weight denominators or heights exceed the 64-bit sampling range")
        self.weight_cum = list(itertools.accumulate(int(w * self.scale) for w in model.weights))
        self.heights = [mc.height for mc in model.multicovers]
        self.sets: list[list[Subset]] = []
        self.mult_cum: list[list[int]] = []
        for mc in model.multicovers:
            members = [(a, c) for a, c in mc.multiplicities.items() if x in a]
            self.sets.append([a for a, _ in members])
            self.mult_cum.append(list(itertools.accumulate(c for _, c in members)))

    def pick(self, j: int, v: int) -> Subset:
        return self.sets[j][bisect.bisect_right(self.mult_cum[j], v)]


def draw(model: ProceduralModel, x: int, rng: np.random.Generator) -> Subset:
    """One coarsened observation of outcome ``x``."""
    sampler = _Sampler(model, x)
    u = int(rng.integers(0, sampler.scale))
    j = bisect.bisect_right(sampler.weight_cum, u)
    v = int(rng.integers(0, sampler.heights[j]))
    return sampler.pick(j, v)


def draw_many(model: ProceduralModel, x: int, count: int, rng: np.random.Generator) -> dict[Subset, int]:
    """Counts of each observed set over ``count`` independent draws for ``x``."""
    sampler = _Sampler(model, x)
    u = rng.integers(0, sampler.scale, size=count)
    j = np.searchsorted(np.asarray(sampler.weight_cum), u, side="right")
    v = rng.integers(0, np.asarray(sampler.heights)[j])
    counts: dict[Subset, int] = {}
    for idx in range(len(model.multicovers)):
        picked = v[j == idx]
        if not picked.size:
            continue
        slot = np.searchsorted(np.asarray(sampler.mult_cum[idx]), picked, side="right")
        for s, c in zip(*np.unique(slot, return_counts=True)):
            a = sampler.sets[idx][int(s)]
            counts[a] = counts.get(a, 0) + int(c)
    return dict(sorted(counts.items()))


@dataclass(frozen=True)
class ElementReport:
    x: int
    counts: dict
    expected: dict
    statistic: float
    df: int
    critical: float
    flagged: bool

    def frequency(self, subset: Subset) -> float:
        return self.counts.get(subset, 0) / sum(self.counts.values())


@dataclass(frozen=True)
class SimReport:
    seed: int
    samples: int
    elements: tuple[ElementReport, ...]
    warnings: tuple[str, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return not any(e.flagged for e in self.elements)

    def element(self, x: int) -> ElementReport:
        return self.elements[x - 1]


def _pool_cells(cells: list[tuple[float, int]]) -> tuple[list[tuple[float, int]], bool]:
    """Merge the smallest expected cells until every cell expects at least 5."""
    cells = sorted(cells)
    merged = False
    while len(cells) > 1 and cells[0][0] < MIN_EXPECTED:
        (e1, o1), (e2, o2) = cells[0], cells[1]
        cells = sorted([(e1 + e2, o1 + o2)] + cells[2:])
        merged = True
    return cells, merged


def chi_square(observed: Sequence[int], expected: Sequence[float]) -> tuple[float, int, float]:
    """Pearson statistic, degrees of freedom and the 99.9% critical value."""
    df = len(observed) - 1
    if df <= 0:
        return 0.0, 0, math.inf
    stat = sum((o - e) ** 2 / e for o, e in zip(observed, expected))
    return float(stat), df, float(stats.chi2.ppf(CRITICAL_LEVEL, df))


def validate(model: ProceduralModel, samples_per_x: int, seed: int) -> SimReport:
    """Simulate every outcome and compare frequencies with the exact mechanism."""
    if samples_per_x < 1000:
        raise ModelError("validation needs at least 1000 samples per element")
    mech = model_mechanism(model)
    rng = make_rng(seed)
    warnings = []
    elements = []
    for x in mech.space.elements:
        counts = draw_many(model, x, samples_per_x, rng)
        expected = {a: p for a, p in mech.probs.items() if x in a}
        cells = [(float(p * samples_per_x), counts.get(a, 0)) for a, p in expected.items()]
        cells, merged = _pool_cells(cells)
        if merged:
            warnings.append(f"element {x}: merged cells with expected count below {MIN_EXPECTED}")
        stat, df, crit = chi_square([o for _, o in cells], [e for e, _ in cells])
        elements.append(ElementReport(x, counts, expected, stat, df, crit, stat > crit))
    return SimReport(seed, samples_per_x, tuple(elements), tuple(warnings))


def ignorability_statistic(report: SimReport, subset: Subset) -> tuple[float, int, float]:
    """Homogeneity test that ``subset`` is observed equally often from each of its members.

    Builds the members-by-(``subset``, other) contingency table; a CAR model
    should not reject.
    """
    table = []
    for x in subset:
        e = report.element(x)
        hit = e.counts.get(subset, 0)
        table.append([hit, sum(e.counts.values()) - hit])
    table = np.array(table)
    if table.shape[0] < 2 or not table[:, 1].any() or not table[:, 0].any():
        return 0.0, 0, math.inf
    stat, _, df, _ = stats.chi2_contingency(table, correction=False)
    return float(stat), int(df), float(stats.chi2.ppf(CRITICAL_LEVEL, df))
