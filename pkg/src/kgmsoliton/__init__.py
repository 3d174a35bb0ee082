"""Standing-wave solitons of the nonlinear Klein-Gordon-Maxwell system:
profiles, scaling identities and non-existence checks."""

from .potentials import (
    ColemanResult,
    ConditionId,
    DomainError,
    Family,
    ModelConfig,
    Potential,
    coleman_indicator,
    condition_expr,
    eval_dV,
    eval_V,
)
from .profile import RadialProfile, ScalingParams
from .nogo import NoGoVerdict, Status, check_condition, classify_general, classify_power_law
from .solver import (
    ContinuationBreakdown,
    GaugedOptions,
    NoConvergence,
    NoSolution,
    QBallOptions,
    SolverError,
    eom_residual,
    rescale_profile,
    solve_gauged,
    solve_qball,
)
from .virial import (
    FunctionalSet,
    action_value,
    compute_functionals,
    scaling_curve,
    virial_residual_amplitude,
    virial_residual_general,
    virial_residual_power,
)

__version__ = "0.1.0"
