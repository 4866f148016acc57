"""Numerical calculus of log-concave functions ``f = exp(-u)``.

Conjugates, infimal convolution, Asplund sums and projections on grids or
in closed form, plus functional Quermassintegrals ``W_j(f)`` and mixed
Quermassintegrals ``W_j(f, g)``.
"""

__version__ = "0.1.0"

from .convex import (
    BoxSupport,
    ConvexFunction,
    ConvexityError,
    DimensionError,
    EvalResult,
    GridFunction,
    IndicatorBall,
    IndicatorBox,
    LogConcaveFunction,
    NormMultiple,
    Quadratic,
    evaluate,
    load_spec,
    point_indicator,
    sample_to_grid,
    validate_class,
)
from .geometry import BodySpec, body_quermass, gaussian_moments, omega, omega_table
from .grid import GridPlan, GridSpec
from .legendre import (
    asplund_sum,
    conjugate,
    conjugate_bruteforce,
    inf_convolution,
    scalar_right_mul,
    support_function,
)
from .projection import HaarSampler, Subspace, axis_subspaces, project, project_potential
from .quermass import (
    QuermassResult,
    TailMassError,
    blaschke_petkantschin_check,
    existence_bound_check,
    i_total_mass,
    mixed_quermass_fd,
    mixed_quermass_representation,
    quermassintegral,
    total_mass,
)
