"""Best Gaussian approximation of transition-path distributions.

For overdamped Langevin dynamics pinned between two states, this package
finds the Gaussian path measure (mean path, fluctuation field) closest in
relative entropy to the bridge distribution, and provides the surrounding
machinery: reference potentials, Dirichlet Green's kernels of the precision
operator, exact bridge sampling, the action and limit functionals, and the
alternating minimizer with its low-temperature sweep.
"""

from .bridge import (
    BridgeSampleBatch,
    GaussianPathMeasure,
    gaussian_log_normalizer,
    gaussian_measure,
    marginal_std,
    sample_bridge,
)
from .functionals import (
    GammaLimitValue,
    KLBreakdown,
    QuasipotentialResult,
    closed_form_A,
    fbar,
    field_h1_norm_sq,
    freidlin_wentzell,
    ginzburg_landau,
    kl_objective,
    limit_f,
    onsager_machlup,
    quadratic_penalty,
    quasipotential,
    quasipotential_minimizer,
    simplified_f,
    snap_to_critical_points,
)
from .greens import (
    FundamentalMatrix,
    GreenDiagonal,
    IndefiniteOperatorError,
    SchrodingerOperator,
    analytic_const_green,
    assemble_operator,
    fundamental_matrix,
    green_column,
    green_diagonal,
    log_det_term,
)
from .grids import (
    BVStepPath,
    FieldGrid,
    PathGrid,
    constant_field,
    field_derivative,
    field_from_function,
    path_derivative,
    project_spd_floor,
    straight_line_path,
    trapezoid,
)
from .optimize import (
    OptimizationTrace,
    OptimizerConfig,
    SweepReport,
    SweepRow,
    alternate_minimize,
    gamma_sweep,
    grad_m_fbar,
    minimize_path,
)
from .potentials import (
    CriticalPoint,
    PotentialModel,
    builtin_potential,
    finite_difference_third,
    psi_eps,
    validate_potential,
)

__version__ = "0.1.0"
