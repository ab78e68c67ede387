"""Exact construction, verification, decomposition and simulation of CAR mechanisms."""

from .core import (
    CarMechanism,
    CoarseningMechanism,
    Cover,
    MechanismError,
    MixtureDecomposition,
    MixtureTerm,
    NormalizationError,
    Rational,
    SampleSpace,
    Subset,
    mixture,
    partition_mechanism,
    set_partitions,
)
from .fibonacci import fib, fib_as_mechanism, fib_matrix, fib_solution
from .linsolve import IncidenceMatrix, Indeterminate, Infeasible, Unique, incidence, solve_ones
from .multicover import (
    UniformMulticover,
    from_multicover,
    height,
    is_extreme_multicover,
    sub_multicover_search,
    to_multicover,
)
from .polytope import (
    decompose,
    enumerate_extremes,
    farkas_report,
    is_ccar,
    is_extreme,
    rationalize,
)
from .simulate import ProceduralModel, draw, model_mechanism, validate
from .verify import expand, is_car, to_car

__version__ = "0.1.0"
