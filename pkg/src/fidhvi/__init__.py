"""Solver library for fractional-order evolution problems with state jumps and
a nonsmooth inner inclusion, plus hypothesis auditing, perturbation studies,
and a 1-D rod contact application."""

from .errors import ConfigError, ConstantViolation, NonConvergence
from .special import (
    gamma_fn,
    mittag_leffler,
    kernel_cell_weights,
    riemann_liouville_weights,
    caputo_l1,
)
from .trajectory import (
    TimeGrid,
    PiecewiseTrajectory,
    sup_distance,
    trajectory_to_csv,
    trajectory_from_csv,
)
from .inclusion import (
    MonotoneOperator,
    TraceMap,
    NonsmoothFunctional,
    InclusionSolution,
    clarke_directional,
    inclusion_step_size,
    solve_inclusion,
    solve_inclusion_batch,
    inner_lipschitz_ratio,
)
from .solver import (
    Impulse,
    ProblemSpec,
    SolveReport,
    ResidualReport,
    contraction_factor,
    memory_integral,
    sigma_sweep,
    picard_solve,
    residual_check,
    gronwall_envelope,
)
from .hypotheses import (
    ConstantEstimate,
    check_HO,
    hypotheses_report,
    estimate_strong_monotonicity,
    estimate_operator_lipschitz,
    estimate_growth,
    estimate_relaxed_monotonicity,
    estimate_f_lipschitz,
    estimate_coupling_lipschitz,
    estimate_impulse_lipschitz,
    operator_norm_estimate,
)
from .perturbation import (
    PerturbationFamily,
    PerturbationRow,
    StudyResult,
    linear_shift_family,
    validate_family,
    y_error_bound,
    run_perturbation_study,
)
from .presets import Preset, PRESETS, get_preset, list_presets
from .contact import (
    ContactLaw,
    ContactModel,
    CONTACT_MODELS,
    assemble_stiffness,
    assemble_load,
    end_trace,
    get_contact_model,
    to_problem_spec,
    friction_continuation,
    run_contact_perturbation,
)

__version__ = "0.1.0"
