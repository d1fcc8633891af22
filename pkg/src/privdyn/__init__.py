"""privdyn: hidden-state (last-iterate) Renyi DP accounting for noisy
mini-batch gradient descent, with composition baselines, noise calibration,
(eps, delta) conversion, and an exact 1-D Gaussian verification oracle."""

from .params import (
    AccountingError,
    AccountingParams,
    BatchCountTooSmall,
    ConvexityClass,
    LossRegularity,
    Neighboring,
    NonDividingBatch,
    NonPositive,
    RdpCurve,
    RdpPoint,
    StepsizeTooLarge,
    load_config,
    make_params,
    multiplier_from_sigma,
    sigma_from_multiplier,
    validate,
    with_epochs,
    with_sigma,
)
from .dynamics import (
    FixedBatchBound,
    IndexOutOfRange,
    LsiSequence,
    RecursionStep,
    bound_convex_fixed,
    bound_fixed,
    bound_naive_baseline,
    bound_strongly_convex_fixed,
    eps0_term,
    lsi_constant,
    recursion_coefficients,
)
from .sampling import (
    SampWoState,
    ShuffleBound,
    WeightsNotNormalized,
    bound_samp_wo_replacement,
    bound_shuffle,
    check_joint_convexity,
    mixture_bound,
    samp_wo_limit,
    samp_wo_log_states,
)
from .baselines import (
    NonIntegerOrder,
    SgmParams,
    mixing_diffusion_first_batch,
    mixing_diffusion_last_batch,
    sgm_composition,
    sgm_eps,
    sgm_epoch_approximation,
    sgm_rdp_per_step,
)
from .convert import (
    DEFAULT_ALPHA_GRID,
    DpGuarantee,
    EmptyInput,
    InvalidDelta,
    LogisticConstants,
    corollary_logistic_bound,
    logistic_constants,
    logistic_params,
    rdp_to_dp,
    translate_neighboring,
)
from .calibrate import (
    MAXED_OUT,
    BoundKind,
    BracketTooNarrow,
    MaxedOut,
    Unsatisfiable,
    bound_limit,
    calibrate_noise,
    converted_eps,
    evaluate_bound,
    max_epochs,
)
from .oracle import (
    DominanceViolated,
    GaussianLaw,
    OracleInstance,
    SensitivityViolated,
    StatisticalMismatch,
    exact_renyi,
    gaussian_law,
    make_instance,
    monte_carlo_check,
    verify_dominance,
)

__version__ = "1.0.0"
