"""Transfer strategies against poverty traps: analytics, simulation, insurance."""

from .model_core import (
    BetaAlphaOne,
    JumpEvent,
    Kumaraswamy,
    LossLaw,
    ModelParams,
    ThresholdStrategy,
    Trajectory,
    apply_loss,
    flow,
    mean_z,
    sample_z,
    simulate_path,
)
from .closed_form import (
    HypergeometricParams,
    StrategyComparison,
    ValueEstimate,
    abc_params,
    compare_strategies,
    cost_C,
    cost_C_general,
    hyp2f1,
    perpetual_D,
    value_threshold_closed,
)
from .mc_engine import (
    BLOCK_SIZE,
    McConfig,
    PathOutcome,
    default_horizon,
    estimate_D,
    estimate_Vy,
    estimate_Vy_at_y,
    path_outcome,
)
from .ide_solver import (
    CapitalGrid,
    GridFunction,
    SupersolutionReport,
    apply_T,
    hjb_residual,
    solve_fixed_point,
    tail_exponent,
    verify_supersolution,
)
from .threshold_optimizer import (
    ClosedFormEvaluator,
    FixedPointEvaluator,
    MonteCarloEvaluator,
    OptimizeResult,
    objective,
    optimize,
)
from .microinsurance import (
    Cover,
    InsuredModel,
    TransformedLaw,
    build_insured_model,
    cdf_w,
    premium_rate,
    sample_w,
)

__version__ = "0.1.0"
