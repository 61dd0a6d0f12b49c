"""Discrete collision-induced breakage: kinetics, truncated dynamics and estimates."""

from .analysis import (
    BoundsReport,
    DistanceSeries,
    LongTimeReport,
    check_g0_moment_bound,
    check_reaction_bounds,
    check_tail_monotonicity,
    compute_bounds,
    g0_moment,
    gronwall_experiment,
    longtime_report,
    reaction_integrals,
)
from .errors import (
    BreakageError,
    ConfigError,
    ConvergenceError,
    DomainError,
    IntegrationError,
    ModeError,
    NegativityError,
    PreconditionError,
    RangeError,
    SolverError,
    ValidationError,
)
from .integrator import IntegratorConfig, StepInfo, Trajectory, detect_steady_state, integrate
from .kinetics import (
    BcondWitness,
    CollisionKernel,
    FragmentDistribution,
    ValidationReport,
    WeightFunction,
    WeightSequence,
    bcond_constants,
    check_weight_class,
    default_alpha1,
    find_bcond_witness,
    load_fragment_table,
    load_kernel_table,
    validate_kernel,
    validate_lmc1,
    validate_weight_sequence,
    xi,
)
from .scenario import Scenario, load_scenario, run_preset, run_scenario
from .svg import render_svg
from .system import (
    MomentReport,
    SystemConfig,
    geometric_state,
    jacobian,
    mass,
    moments,
    monomer_state,
    number,
    reaction_terms,
    rhs,
    weak_form_dissipation,
    weak_form_residual,
)

__version__ = "0.1.0"
