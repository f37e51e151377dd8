"""obflow: pseudo-spectral coupled convection with a regularity monitor.

A desk-scale solver for incompressible flow coupled to temperature and
solute transport on a periodic box, plus a library that measures weak
Lebesgue (Marcinkiewicz) norms, checks space-time integrability criteria
with explicit calibrated constants, and tracks every growth envelope and
differential-inequality residual along simulated trajectories.
"""

from .fields import (
    DIVERGENCE_FLAG,
    Grid,
    GridMismatchError,
    PHYSICAL,
    SPECTRAL,
    ScalarField,
    VectorField,
    convective_scalar,
    convective_vector,
    dealias,
    divergence,
    grad_l2,
    gradient,
    inner_product,
    l2_norm,
    laplacian,
    leray_project,
    stokes_apply,
    stokes_l2,
    to_physical,
    to_spectral,
)
from .norms import (
    InterpolationBound,
    TimeSeries,
    WeightedSamples,
    bochner_strong,
    bochner_weak_time,
    distribution_function,
    interpolation_check,
    layer_cake,
    lp_norm,
    weak_lp_norm,
)
from .dynamics import (
    BlowUpError,
    CFLViolationError,
    Forcing,
    PhysicsParams,
    RunResult,
    SimState,
    SolverOptions,
    TrajectoryRecorder,
    cfl_dt,
    rhs,
    run,
    step,
)
from .monitor import (
    CalibratedConstants,
    CalibrationProvenance,
    DegenerateFamilyError,
    EnvelopeSeries,
    MonitorReport,
    PairValidationError,
    ProdiSerrinPair,
    Verdict,
    build_report,
    calibrate,
    gamma_constant,
    gamma_threshold,
    gronwall_envelope_u,
    k_series,
    pair_from_s,
    psi_envelope,
    psi_search,
    scalar_envelopes,
    theorem1_criterion,
    theorem2_criterion,
    validate_pair,
)

__version__ = "0.1.0"
