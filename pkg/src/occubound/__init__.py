"""Sharp occupation-density bounds for 1-D Ito processes with coefficients
constrained to a box, plus the Monte Carlo machinery to confirm the bound is
both valid (no admissible process beats it) and sharp (an explicit feedback
control nearly attains it)."""

from .bounds import (
    BoundReport,
    CoefficientBox,
    Query,
    bound_curvature,
    bound_slope,
    density_rate,
    distance_bound,
    drift_score,
    laplace_consistency,
    normal_cdf,
    normal_pdf,
    occupation_bound,
    resolvent_bound,
    resolvent_curvature,
    resolvent_decay,
    resolvent_pasting_jump,
    resolvent_slope,
    zero_drift_bound,
)
from .controls import (
    ADVERSARIAL_PRESETS,
    PRESET_NAMES,
    AdmissibilityReport,
    FeedbackControl,
    MollificationParams,
    control_from_table,
    make_extremal_control,
    preset_control,
    signum,
    validate_admissible,
)
from .engine import (
    OccupationEstimate,
    SimConfig,
    UnderResolvedWindowWarning,
    bias_budget,
    estimate_local_time,
    estimate_occupation_density,
    simulate_paths,
    suboptimality_budget,
    zero_noise_factory,
)
from .errors import DomainError, MonotonicityError, SupportError, ToleranceError
from .integrals import mc_path_integral, path_integral_bound, time_integral_bound
from .profiles import (
    ProfileFunction,
    TimeProfileFunction,
    indicator_profile,
    load_profile_csv,
    piecewise_linear_profile,
)
from .verify import (
    CheckReport,
    run_analytic_suite,
    run_sharpness_experiment,
    run_validity_experiment,
)

__version__ = "0.1.0"
