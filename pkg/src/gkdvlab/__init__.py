"""Hylomorphic solitons of the generalized KdV equation.

Ground states are found by minimizing the energy at fixed charge, evolved
with an exponential integrator, and checked for the traveling-wave identity,
conservation and orbital stability.
"""

__version__ = "0.1.0"

from .errors import BlowUpError, CollapseError, DomainError, InsufficientSamplesError
from .model import (
    AssumptionReport,
    NonlinearityModel,
    abs_power,
    check_assumptions,
    eval_w,
    eval_w_prime,
    eval_w_second,
    gauge_shift,
    kdv,
    mkdv,
    polynomial,
)
from .spectral import Field, Grid, dealias, derivative, translate
from .functionals import (
    charge,
    eigen_residual,
    energy,
    h1_distance,
    orbital_distance,
)
from .groundstate import (
    GroundState,
    MinimizerOptions,
    minimize_energy_at_charge,
    nls_ground_state,
    speed_charge_curve,
)
from .evolution import EvolutionTrace, evolve, travel_test
from .stability import (
    PerturbationSpec,
    hylomorphy_ratio,
    perturb,
    stability_experiment,
    subadditivity_check,
)
